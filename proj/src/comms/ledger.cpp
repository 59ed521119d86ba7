#include "copercept/comms/ledger.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace copercept {

std::size_t CommLedger::total() const {
  std::size_t t = 0;
  for (const auto& e : entries_) t += e.bytes;
  return t;
}

std::size_t CommLedger::total(MessageKind kind) const {
  std::size_t t = 0;
  for (const auto& e : entries_) {
    if (e.kind == kind) t += e.bytes;
  }
  return t;
}

std::size_t CommLedger::messages(MessageKind kind) const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.kind == kind) ++n;
  }
  return n;
}

std::size_t CommLedger::total_round(int round) const {
  std::size_t t = 0;
  for (const auto& e : entries_) {
    if (e.round == round) t += e.bytes;
  }
  return t;
}

std::string CommLedger::to_tsv() const {
  std::ostringstream os;
  os << "round\tsender\treceiver\tkind\tscale\trecords\tbytes\tlog2_bytes\n";
  char buf[32];
  for (const auto& e : entries_) {
    std::snprintf(buf, sizeof(buf), "%.4f", e.bytes > 0 ? std::log2(double(e.bytes)) : 0.0);
    os << e.round << '\t' << e.sender << '\t' << e.receiver << '\t' << to_string(e.kind) << '\t' << e.scale << '\t'
       << e.records << '\t' << e.bytes << '\t' << buf << '\n';
  }
  return os.str();
}

std::string CommLedger::drops_tsv() const {
  std::ostringstream os;
  os << "round\tsender\treceiver\tkind\tscale\tbytes\treason\n";
  for (const auto& d : drops_) {
    os << d.round << '\t' << d.sender << '\t' << d.receiver << '\t' << to_string(d.kind) << '\t' << d.scale << '\t'
       << d.bytes << '\t' << d.reason << '\n';
  }
  return os.str();
}

}  // namespace copercept
