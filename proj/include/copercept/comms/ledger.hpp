#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "copercept/comms/message.hpp"

namespace copercept {

struct LedgerEntry {
  int round = 0;
  AgentId sender = 0;
  AgentId receiver = 0;
  MessageKind kind = MessageKind::kVoxelPrior;
  int scale = 0;
  std::size_t bytes = 0;  // full encoded length, header included
  std::size_t records = 0;
};

/// A message (or part of one) withheld to respect the byte budget.
struct DropEvent {
  int round = 0;
  AgentId sender = 0;
  AgentId receiver = 0;
  MessageKind kind = MessageKind::kVoxelPrior;
  int scale = 0;
  std::size_t bytes = 0;
  std::string reason;
};

/// Bytes put on the wire during one exchange.
class CommLedger {
 public:
  CommLedger() = default;
  explicit CommLedger(std::optional<std::size_t> budget) : budget_(budget) {}

  void record(const LedgerEntry& e) { entries_.push_back(e); }
  void log_drop(DropEvent d) { drops_.push_back(std::move(d)); }

  std::size_t total() const;
  std::size_t total(MessageKind kind) const;
  std::size_t messages(MessageKind kind) const;
  std::size_t total_round(int round) const;

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const std::vector<DropEvent>& drops() const { return drops_; }
  const std::optional<std::size_t>& budget() const { return budget_; }

  /// Tab-separated table: round, sender, receiver, kind, scale, records, bytes, log2 bytes.
  std::string to_tsv() const;
  std::string drops_tsv() const;

 private:
  std::optional<std::size_t> budget_;
  std::vector<LedgerEntry> entries_;
  std::vector<DropEvent> drops_;
};

}  // namespace copercept
