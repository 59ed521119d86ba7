#include "copercept/comms/exchange.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "copercept/core/error.hpp"
#include "copercept/core/warp.hpp"

namespace copercept {

namespace {

using Link = std::pair<AgentId, AgentId>;  // (sender, receiver)

struct Packet {
  AgentId receiver = 0;
  std::vector<std::byte> bytes;
};

// Per-agent state kept across rounds.
struct AgentState {
  const AgentInput* in = nullptr;
  Stage1Output stage1;
  ScalePyramid pyramid;
  std::vector<Heatmap> heat;
  std::vector<BevFeature> completed;
};

// Content-independent message sizes for one configuration.
struct Sizes {
  const WireSchema& schema;
  const ExchangeConfig& cfg;
  std::vector<Link> links;       // sorted
  std::vector<Link> query_links;  // sorted; both directions linked

  int level_cells(int l) const { return static_cast<int>(schema.level_shape(l).columns()); }
  int k_ic_at(int k, int l) const { return std::min(k, level_cells(l)); }
  int k_ir_at(int l) const { return std::min(cfg.collab.k_ir[l], level_cells(l)); }

  std::size_t voxel() const { return encoded_size(MessageKind::kVoxelPrior, schema, 0); }

  std::size_t heatmaps() const {
    std::size_t t = 0;
    for (int l = 0; l < schema.scales; ++l) t += encoded_size(MessageKind::kHeatmapShare, schema, l);
    return t * links.size();
  }

  std::size_t queries(int k, MessageKind kind) const {
    std::size_t t = 0;
    for (int l = 0; l < schema.scales; ++l) {
      const auto n = static_cast<std::size_t>(k_ic_at(k, l));
      if (n > 0) t += encoded_size(kind, schema, l, n);
    }
    return t * query_links.size();
  }

  std::size_t query_reply(int k) const {
    return queries(k, MessageKind::kInstanceQuery) + queries(k, MessageKind::kInstanceReply);
  }

  std::size_t broadcasts() const {
    std::size_t t = 0;
    for (int l = 0; l < schema.scales; ++l) {
      const auto n = static_cast<std::size_t>(k_ir_at(l));
      if (n > 0) t += encoded_size(MessageKind::kInstanceBroadcast, schema, l, n);
    }
    return t * links.size();
  }

  std::size_t fixed(const ExchangePlan& p) const {
    std::size_t t = voxel() * p.voxel_links.size();
    if (p.heatmaps) t += heatmaps();
    if (p.heatmaps && p.k_ic > 0) t += query_reply(p.k_ic);
    return t;
  }
};

ExchangePlan make_plan(const Sizes& sz, CommLedger& ledger) {
  const ExchangeConfig& cfg = sz.cfg;
  ExchangePlan plan;
  plan.k_ic = cfg.collab.k_ic;
  if (cfg.mix_enabled) plan.voxel_links.insert(sz.links.begin(), sz.links.end());
  if (!cfg.budget_bytes) return plan;
  const std::size_t budget = *cfg.budget_bytes;

  std::size_t fixed = sz.fixed(plan);
  if (fixed <= budget) {
    if (fixed + sz.broadcasts() > budget) plan.broadcast_allowance = budget - fixed;
    return plan;
  }

  plan.broadcasts = false;
  for (const Link& link : sz.links) {
    for (int l = 0; l < sz.schema.scales; ++l) {
      const auto n = static_cast<std::size_t>(sz.k_ir_at(l));
      if (n == 0) continue;
      ledger.log_drop({4, link.first, link.second, MessageKind::kInstanceBroadcast, l,
                       encoded_size(MessageKind::kInstanceBroadcast, sz.schema, l, n), "budget: broadcasts dropped"});
    }
  }

  const int k_full = plan.k_ic;
  while (plan.k_ic > 0 && sz.fixed(plan) > budget) --plan.k_ic;
  if (plan.k_ic != k_full) {
    ledger.log_drop({3, 0, 0, MessageKind::kInstanceQuery, 0, sz.query_reply(k_full) - sz.query_reply(plan.k_ic),
                     "budget: k_ic reduced from " + std::to_string(k_full) + " to " + std::to_string(plan.k_ic)});
  }
  if (plan.k_ic > 0) return plan;

  plan.heatmaps = false;
  for (const Link& link : sz.links) {
    for (int l = 0; l < sz.schema.scales; ++l) {
      ledger.log_drop({2, link.first, link.second, MessageKind::kHeatmapShare, l,
                       encoded_size(MessageKind::kHeatmapShare, sz.schema, l), "budget: heatmaps dropped"});
    }
  }

  fixed = sz.fixed(plan);
  while (fixed > budget && !plan.voxel_links.empty()) {
    auto last = std::prev(plan.voxel_links.end());
    ledger.log_drop({1, last->first, last->second, MessageKind::kVoxelPrior, 0, sz.voxel(),
                     "budget: voxel prior dropped"});
    plan.voxel_links.erase(last);
    fixed -= sz.voxel();
  }
  return plan;
}

Sizes link_sizes(const WireSchema& schema, const ExchangeConfig& cfg, const CommGraph& graph) {
  Sizes sz{schema, cfg, {}, {}};
  for (AgentId s : graph.agents()) {
    for (AgentId r : graph.agents()) {
      if (s == r || !graph.linked(s, r)) continue;
      sz.links.push_back({s, r});
      if (graph.linked(r, s)) sz.query_links.push_back({s, r});
    }
  }
  return sz;
}

void deliver(std::vector<Packet>& round, const std::optional<std::uint64_t>& seed, int round_no) {
  if (!seed) return;
  std::mt19937_64 rng(*seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(round_no)));
  std::shuffle(round.begin(), round.end(), rng);
}

// Decodes every packet addressed to `receiver`, checks links, orders by (sender, scale).
std::vector<Message> inbox(const std::vector<Packet>& round, AgentId receiver, const WireSchema& schema,
                           const CommGraph& graph) {
  std::vector<Message> out;
  for (const Packet& p : round) {
    if (p.receiver != receiver) continue;
    Message m = decode(p.bytes, schema);
    if (m.receiver != receiver) {
      throw ProtocolError("agent " + std::to_string(receiver) + " received a message addressed to " +
                          std::to_string(m.receiver));
    }
    graph.require_link(m.sender, m.receiver);
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
    return std::tie(a.sender, a.scale) < std::tie(b.sender, b.scale);
  });
  return out;
}

void send(const Message& m, int round, std::vector<Packet>& out, std::vector<LedgerEntry>& entries) {
  Packet p{m.receiver, encode(m)};
  const std::size_t records = m.values.size() + m.positions.size() + m.instances.size();
  entries.push_back({round, m.sender, m.receiver, m.kind, m.scale, p.bytes.size(), records});
  out.push_back(std::move(p));
}

void commit(std::vector<LedgerEntry>& entries, CommLedger& ledger) {
  std::stable_sort(entries.begin(), entries.end(), [](const LedgerEntry& a, const LedgerEntry& b) {
    return std::tie(a.sender, a.receiver, a.kind, a.scale) < std::tie(b.sender, b.receiver, b.kind, b.scale);
  });
  for (const auto& e : entries) ledger.record(e);
  entries.clear();
}

std::vector<float> flat_values(const CellMatrix<float>& m) { return {m.data(), m.data() + m.size()}; }

Heatmap heat_from_values(const std::vector<float>& v, const GridShape& shape, AgentId frame, int scale) {
  CellMatrix<float> m = Eigen::Map<const CellMatrix<float>>(v.data(), shape.columns(), 1);
  return Heatmap{BevFeature(shape, std::move(m), frame), scale};
}

// Drops the lowest-heat broadcast entries until round 4 fits in `allowance` bytes.
void trim_broadcasts(std::map<std::tuple<AgentId, AgentId, int>, Message>& msgs, std::size_t allowance,
                     const WireSchema& schema, CommLedger& ledger) {
  std::size_t total = 0;
  for (const auto& [key, m] : msgs) total += m.byte_len();
  if (total <= allowance) return;

  struct Entry {
    float heat;
    AgentId sender, receiver;
    int scale;
    std::size_t rank;
  };
  std::vector<Entry> order;
  for (const auto& [key, m] : msgs) {
    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      order.push_back({m.instances[i].heat, m.sender, m.receiver, m.scale, i});
    }
  }
  std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
    if (a.heat != b.heat) return a.heat < b.heat;
    if (std::tie(a.sender, a.receiver, a.scale) != std::tie(b.sender, b.receiver, b.scale)) {
      return std::tie(a.sender, a.receiver, a.scale) < std::tie(b.sender, b.receiver, b.scale);
    }
    return a.rank > b.rank;
  });

  std::map<std::tuple<AgentId, AgentId, int>, std::size_t> keep;
  std::map<std::tuple<AgentId, AgentId, int>, std::size_t> dropped_bytes;
  for (const auto& [key, m] : msgs) keep[key] = m.instances.size();
  const std::size_t rec = schema.record_bytes();
  for (const Entry& e : order) {
    if (total <= allowance) break;
    const auto key = std::make_tuple(e.sender, e.receiver, e.scale);
    --keep[key];
    std::size_t saved = rec + (keep[key] == 0 ? kHeaderBytes : 0);
    total -= saved;
    dropped_bytes[key] += saved;
  }
  for (const auto& [key, bytes] : dropped_bytes) {
    Message& m = msgs.at(key);
    const std::size_t n = keep[key];
    ledger.log_drop({4, m.sender, m.receiver, MessageKind::kInstanceBroadcast, m.scale, bytes,
                     "budget: broadcast trimmed to " + std::to_string(n) + " records"});
    // Entries are in descending heat, so the survivors are a prefix.
    m.instances.resize(n);
    if (n == 0) msgs.erase(key);
  }
}

}  // namespace

PipelineWeights PipelineWeights::from(const WeightSet& w, const ModelDims& d) {
  return {Stage1Weights::from(w, d), CollabWeights::from(w, d)};
}

void ExchangeConfig::validate() const {
  compression.validate();
  collab.validate();
  if (hmf_window < 1 || hmf_window % 2 == 0) throw ParameterError("hmf window must be a positive odd number");
}

BandwidthEstimate estimate_bandwidth(const WireSchema& schema, const ExchangeConfig& cfg, const CommGraph& graph) {
  cfg.validate();
  const Sizes sz = link_sizes(schema, cfg, graph);
  CommLedger scratch;
  BandwidthEstimate e;
  e.plan = make_plan(sz, scratch);
  e.voxel_prior = sz.voxel() * e.plan.voxel_links.size();
  if (e.plan.heatmaps) e.heatmap = sz.heatmaps();
  if (e.plan.heatmaps && e.plan.k_ic > 0) {
    e.query = sz.queries(e.plan.k_ic, MessageKind::kInstanceQuery);
    e.reply = sz.queries(e.plan.k_ic, MessageKind::kInstanceReply);
  }
  if (e.plan.broadcasts) {
    e.broadcast = sz.broadcasts();
    if (e.plan.broadcast_allowance) e.broadcast = std::min(e.broadcast, *e.plan.broadcast_allowance);
  }
  return e;
}

const AgentOutput& ExchangeResult::agent(AgentId id) const {
  for (const auto& a : agents) {
    if (a.id == id) return a;
  }
  throw ParameterError("no output for agent " + std::to_string(id));
}

ExchangeResult run_exchange(const std::vector<AgentInput>& inputs, const CommGraph& graph, const ExchangeConfig& cfg,
                            const PipelineWeights& w) {
  cfg.validate();
  if (inputs.empty()) throw ParameterError("run_exchange needs at least one agent");

  std::vector<const AgentInput*> sorted;
  for (const auto& a : inputs) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(), [](const AgentInput* a, const AgentInput* b) { return a->id < b->id; });
  const GridShape grid = sorted.front()->lidar.shape();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const AgentInput& a = *sorted[i];
    if (i > 0 && a.id == sorted[i - 1]->id) throw ParameterError("duplicate agent id " + std::to_string(a.id));
    if (!graph.contains(a.id)) throw ProtocolError("agent " + std::to_string(a.id) + " is not in the graph");
    if (a.lidar.shape() != grid || !a.camera.shape().same_extent(grid)) {
      throw ShapeError("agent " + std::to_string(a.id) + " grid differs from agent " + std::to_string(sorted[0]->id));
    }
    if (cfg.heatmaps == HeatmapSource::kOracle && !a.ideal_heat) {
      throw ParameterError("oracle heatmaps need an ideal heatmap for agent " + std::to_string(a.id));
    }
  }
  if (cfg.mix_enabled) compress_voxel(sorted.front()->lidar, cfg.compression);  // fail fast on divisibility

  WireSchema schema{grid, cfg.compression, static_cast<int>(w.stage1.hmf.concat.weight.rows()), cfg.collab.scales};

  std::map<AgentId, std::size_t> index;
  std::vector<AgentState> st(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    index[sorted[i]->id] = i;
    st[i].in = sorted[i];
  }
  auto pose_of = [&](AgentId id) { return st[index.at(id)].in->believed_pose; };
  auto rel = [&](AgentId s, AgentId r) { return relative_pose(pose_of(s), pose_of(r)); };

  std::vector<AgentId> ids;
  for (const AgentInput* a : sorted) ids.push_back(a->id);
  CommGraph active = CommGraph::complete(ids);
  for (AgentId s : ids) {
    for (AgentId r : ids) {
      if (s != r && !graph.linked(s, r)) active.remove_link(s, r);
    }
  }
  const Sizes sz = link_sizes(schema, cfg, active);

  ExchangeResult result;
  result.ledger = CommLedger(cfg.budget_bytes);
  result.plan = make_plan(sz, result.ledger);
  const ExchangePlan& plan = result.plan;
  const int scales = cfg.collab.scales;
  std::vector<LedgerEntry> entries;

  // Round 1: compressed LiDAR voxel priors.
  std::vector<Packet> r1;
  for (const Link& link : plan.voxel_links) {
    const VoxelFeature c = compress_voxel(st[index.at(link.first)].in->lidar, cfg.compression);
    Message m{MessageKind::kVoxelPrior, link.first, link.second, 0, flat_values(c.cells()), {}, {}};
    send(m, 1, r1, entries);
  }
  commit(entries, result.ledger);
  deliver(r1, cfg.shuffle_seed, 1);

  for (AgentState& a : st) {
    std::vector<VoxelFeature> priors;
    for (const Message& m : inbox(r1, a.in->id, schema, graph)) {
      const GridShape ps = schema.prior_shape();
      CellMatrix<float> cells = Eigen::Map<const CellMatrix<float>>(m.values.data(), ps.voxels(), ps.channels);
      const VoxelFeature prior = decompress_voxel(VoxelFeature(ps, std::move(cells), m.sender), grid);
      priors.push_back(warp_to_frame(prior, rel(m.sender, a.in->id), grid, m.sender));
    }
    a.stage1 = fuse_stage1(a.in->lidar, a.in->camera, priors, cfg.mix_enabled, w.stage1, cfg.hmf_window);
    a.pyramid = ScalePyramid::build(a.stage1.fused, scales);
    if (cfg.heatmaps == HeatmapSource::kOracle) {
      a.heat = heatmap_pyramid(Heatmap::from(*a.in->ideal_heat, 0), scales);
    } else {
      for (int l = 0; l < scales; ++l) a.heat.push_back(detection_heatmap(a.pyramid.levels[l], w.collab.head, l));
    }
  }

  // Round 2: heatmaps in the sender's frame; receivers warp them into their own.
  std::vector<Packet> r2;
  if (plan.heatmaps) {
    for (const Link& link : sz.links) {
      const AgentState& s = st[index.at(link.first)];
      for (int l = 0; l < scales; ++l) {
        send({MessageKind::kHeatmapShare, link.first, link.second, l, flat_values(s.heat[l].map.cells()), {}, {}}, 2,
             r2, entries);
      }
    }
  }
  commit(entries, result.ledger);
  deliver(r2, cfg.shuffle_seed, 2);

  // (receiver, sender) -> heatmaps warped into the receiver's frame, per scale.
  std::map<Link, std::vector<Heatmap>> warped_heat;
  for (AgentState& a : st) {
    for (const Message& m : inbox(r2, a.in->id, schema, graph)) {
      const GridShape ls = a.heat[m.scale].map.shape();
      const Heatmap sender_heat = heat_from_values(m.values, ls, m.sender, m.scale);
      auto& v = warped_heat[{a.in->id, m.sender}];
      v.resize(scales);
      v[m.scale] = Heatmap{warp_to_frame(sender_heat.map, rel(m.sender, a.in->id), ls, a.in->id), m.scale};
    }
  }

  // Round 3: each receiver queries the cells where a sender is most confident relative to itself.
  std::vector<Packet> queries;
  if (plan.heatmaps && plan.k_ic > 0) {
    for (const Link& link : sz.query_links) {
      const AgentId sender = link.first, receiver = link.second;
      const AgentState& r = st[index.at(receiver)];
      const auto it = warped_heat.find({receiver, sender});
      if (it == warped_heat.end()) throw ProtocolError("no heatmap from " + std::to_string(sender));
      for (int l = 0; l < scales; ++l) {
        const int k = sz.k_ic_at(plan.k_ic, l);
        if (k == 0) continue;
        graph.require_link(receiver, sender);
        const auto cells = select_k_min(discrepancy(r.heat[l], it->second[l]), k);
        send({MessageKind::kInstanceQuery, receiver, sender, l, {}, cells, {}}, 3, queries, entries);
      }
    }
  }
  deliver(queries, cfg.shuffle_seed, 3);

  std::vector<Packet> replies;
  for (const AgentState& s : st) {
    for (const Message& q : inbox(queries, s.in->id, schema, graph)) {
      const Pose p = rel(s.in->id, q.sender);
      const GridShape ls = s.pyramid.levels[q.scale].shape();
      const BevFeature b = warp_to_frame(s.pyramid.levels[q.scale], p, ls, q.sender);
      const Heatmap h{warp_to_frame(s.heat[q.scale].map, p, ls.with_channels(1), q.sender), q.scale};
      Message m{MessageKind::kInstanceReply, s.in->id, q.sender, q.scale, {}, {}, gather_instances(b, h, q.positions)};
      for (auto& inst : m.instances) {
        inst.owner = s.in->id;
        inst.scale = q.scale;
      }
      send(m, 3, replies, entries);
    }
  }
  commit(entries, result.ledger);
  deliver(replies, cfg.shuffle_seed, 4);

  for (AgentState& a : st) {
    std::vector<std::vector<SenderInstances>> per_scale(scales);
    for (Message& m : inbox(replies, a.in->id, schema, graph)) {
      per_scale[m.scale].push_back({m.sender, std::move(m.instances)});
    }
    for (int l = 0; l < scales; ++l) a.completed.push_back(instance_complete(a.pyramid.levels[l], per_scale[l], w.collab.ic));
  }

  // Round 4: each sender broadcasts its most confident completed cells, in the receiver's frame.
  std::map<std::tuple<AgentId, AgentId, int>, Message> bmsgs;
  if (plan.broadcasts) {
    for (const Link& link : sz.links) {
      const AgentState& s = st[index.at(link.first)];
      const Pose p = rel(link.first, link.second);
      for (int l = 0; l < scales; ++l) {
        const int k = sz.k_ir_at(l);
        if (k == 0) continue;
        const GridShape ls = s.pyramid.levels[l].shape();
        const BevFeature b = warp_to_frame(s.completed[l], p, ls, link.second);
        const Heatmap h{warp_to_frame(s.heat[l].map, p, ls.with_channels(1), link.second), l};
        Message m{MessageKind::kInstanceBroadcast, link.first, link.second, l, {}, {}, select_k_max(h, b, k)};
        for (auto& inst : m.instances) inst.owner = link.first;
        bmsgs.emplace(std::make_tuple(link.first, link.second, l), std::move(m));
      }
    }
    if (plan.broadcast_allowance) trim_broadcasts(bmsgs, *plan.broadcast_allowance, schema, result.ledger);
  }
  std::vector<Packet> r4;
  for (const auto& [key, m] : bmsgs) send(m, 4, r4, entries);
  commit(entries, result.ledger);
  deliver(r4, cfg.shuffle_seed, 5);

  for (AgentState& a : st) {
    std::vector<std::vector<SenderInstances>> per_scale(scales);
    for (Message& m : inbox(r4, a.in->id, schema, graph)) {
      per_scale[m.scale].push_back({m.sender, std::move(m.instances)});
    }
    std::vector<BevFeature> refined;
    for (int l = 0; l < scales; ++l) {
      refined.push_back(refine_scale(a.completed[l], a.heat[l], per_scale[l], cfg.collab.k_ir[l], w.collab,
                                     cfg.collab.pos_encoding));
    }
    result.agents.push_back({a.in->id, a.stage1.fused, merge_scales(refined)});
  }

  if (cfg.budget_bytes && result.ledger.total() > *cfg.budget_bytes) {
    throw std::logic_error("exchange exceeded its byte budget");
  }
  return result;
}

}  // namespace copercept
