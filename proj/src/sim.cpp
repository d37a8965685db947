#include "mpcdp/sim.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace mpcdp {

void ClusterConfig::validate() const {
  if (machines < 2) throw Error(ErrorKind::InvalidConfig, "machine count must be at least 2");
  if (words_per_machine < machines)
    throw Error(ErrorKind::InvalidConfig, "words per machine must be at least the machine count");
}

std::uint64_t default_words_per_machine(std::uint64_t n, std::uint32_t m, SpaceClass cls,
                                        double c) {
  const double nn = static_cast<double>(std::max<std::uint64_t>(n, 2));
  const double lg = std::log2(nn);
  const double base = cls == SpaceClass::Polylog ? nn : std::pow(nn, 4.0 / 3.0);
  const double s = std::ceil(c * base / m * lg * lg);
  // Floor so the hash broadcast always fits at tiny n.
  return std::max<std::uint64_t>(static_cast<std::uint64_t>(s), 16ULL * m);
}

const char* cap_kind_name(CapKind k) {
  switch (k) {
    case CapKind::Resident: return "resident";
    case CapKind::Sent: return "sent";
    case CapKind::Received: return "received";
  }
  return "?";
}

CapExceeded::CapExceeded(MachineId machine_, std::uint64_t round_, CapKind kind_,
                         std::uint64_t used_, std::uint64_t cap_)
    : Error(ErrorKind::CapExceeded, "machine " + std::to_string(machine_) + " round " +
                                        std::to_string(round_) + " " + cap_kind_name(kind_) +
                                        " " + std::to_string(used_) + " > " +
                                        std::to_string(cap_)),
      machine(machine_),
      round(round_),
      cap_kind(kind_),
      used(used_),
      cap(cap_) {}

std::vector<Inbox> exchange(std::vector<Message> pending, std::uint32_t machines) {
  std::vector<Inbox> inboxes(machines);
  for (auto& msg : pending) {
    if (msg.receiver >= machines)
      throw Error(ErrorKind::InvalidArgument, "receiver out of range");
    inboxes[msg.receiver].push_back(std::move(msg));
  }
  for (auto& box : inboxes) {
    std::stable_sort(box.begin(), box.end(), [](const Message& a, const Message& b) {
      return a.sender != b.sender ? a.sender < b.sender : a.sequence < b.sequence;
    });
    for (std::size_t i = 1; i < box.size(); ++i) {
      if (box[i].sender == box[i - 1].sender && box[i].sequence == box[i - 1].sequence)
        throw Error(ErrorKind::DuplicateSequence,
                    "sender " + std::to_string(box[i].sender) + " sequence " +
                        std::to_string(box[i].sequence));
    }
  }
  return inboxes;
}

void Cluster::Context::send(MachineId to, Payload payload) {
  if (to >= machines_) throw Error(ErrorKind::InvalidArgument, "receiver out of range");
  sent_ += payload.size();
  out_->push_back(Message{id_, to, std::move(payload), seq_++});
}

void Cluster::Context::broadcast(const Payload& payload) {
  for (MachineId to = 0; to < machines_; ++to) send(to, payload);
}

Cluster::Cluster(ClusterConfig config, std::uint64_t problem_size)
    : config_(config), inboxes_(config.machines), resident_(config.machines, 0) {
  config_.validate();
  ceiling_ = config_.round_ceiling != 0
                 ? config_.round_ceiling
                 : 64ULL * static_cast<std::uint64_t>(ceil_log2(std::max<std::uint64_t>(problem_size, 2))) + 64;
}

void Cluster::round(const Step& step) {
  const std::uint64_t r = metrics_.size() + 1;
  if (r > ceiling_)
    throw Error(ErrorKind::NonTermination, "round ceiling " + std::to_string(ceiling_) + " reached");
  const std::uint32_t m = config_.machines;
  std::vector<Message> outgoing;
  std::vector<std::uint64_t> sent(m, 0);
  for (MachineId id = 0; id < m; ++id) {
    Context ctx;
    ctx.id_ = id;
    ctx.round_ = r;
    ctx.machines_ = m;
    ctx.inbox_ = &inboxes_[id];
    ctx.resident_ = &resident_[id];
    ctx.out_ = &outgoing;
    step(ctx);
    sent[id] = ctx.sent_;
  }
  RoundMetrics rm;
  rm.round_index = r;
  std::vector<std::uint64_t> received(m, 0);
  for (const auto& msg : outgoing) {
    received[msg.receiver] += msg.payload.size();
    rm.total_words_moved += msg.payload.size();
  }
  for (MachineId id = 0; id < m; ++id) {
    rm.max_resident_words = std::max(rm.max_resident_words, resident_[id]);
    rm.max_sent_words = std::max(rm.max_sent_words, sent[id]);
    rm.max_received_words = std::max(rm.max_received_words, received[id]);
  }
  metrics_.push_back(rm);
  if (config_.enforce_caps) {
    const std::uint64_t s = config_.words_per_machine;
    // Senders first: an oversized send is the cause of the receive overflow.
    for (MachineId id = 0; id < m; ++id)
      if (sent[id] > s) throw CapExceeded(id, r, CapKind::Sent, sent[id], s);
    for (MachineId id = 0; id < m; ++id)
      if (received[id] > s) throw CapExceeded(id, r, CapKind::Received, received[id], s);
    for (MachineId id = 0; id < m; ++id)
      if (resident_[id] > s) throw CapExceeded(id, r, CapKind::Resident, resident_[id], s);
  }
  inboxes_ = exchange(std::move(outgoing), m);
}

bool Cluster::has_pending() const {
  for (const auto& box : inboxes_)
    if (!box.empty()) return true;
  return false;
}

std::uint64_t Cluster::max_resident() const {
  std::uint64_t v = 0;
  for (const auto& rm : metrics_) v = std::max(v, rm.max_resident_words);
  return v;
}
std::uint64_t Cluster::max_sent() const {
  std::uint64_t v = 0;
  for (const auto& rm : metrics_) v = std::max(v, rm.max_sent_words);
  return v;
}
std::uint64_t Cluster::max_received() const {
  std::uint64_t v = 0;
  for (const auto& rm : metrics_) v = std::max(v, rm.max_received_words);
  return v;
}

SimulationResult run_simulation(const Program& program, const ClusterConfig& config,
                                std::vector<Payload> shards) {
  config.validate();
  if (shards.size() != config.machines)
    throw Error(ErrorKind::InvalidConfig, "shard count must equal machine count");
  std::uint64_t total = 0;
  for (const auto& sh : shards) {
    if (config.enforce_caps && sh.size() > config.words_per_machine)
      throw Error(ErrorKind::InvalidConfig, "initial shard exceeds words per machine");
    total += sh.size();
  }
  Cluster cluster(config, total);
  bool done = false;
  while (!done) {
    std::uint32_t halted = 0;
    cluster.round([&](Cluster::Context& ctx) {
      MachineStep step(ctx, shards[ctx.id()]);
      program(step);
      ctx.set_resident(shards[ctx.id()].size());
      if (step.halted()) ++halted;
    });
    done = halted == config.machines && !cluster.has_pending();
  }
  return SimulationResult{std::move(shards), cluster.metrics()};
}

std::string metrics_json(const std::vector<RoundMetrics>& metrics) {
  nlohmann::json j;
  j["rounds"] = metrics.size();
  j["per_round"] = nlohmann::json::array();
  for (const auto& rm : metrics) {
    j["per_round"].push_back({{"round", rm.round_index},
                              {"max_resident", rm.max_resident_words},
                              {"max_sent", rm.max_sent_words},
                              {"max_received", rm.max_received_words},
                              {"total_moved", rm.total_words_moved}});
  }
  return j.dump();
}

}  // namespace mpcdp
