#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mpcdp/common.hpp"

namespace mpcdp {

struct ClusterConfig {
  std::uint32_t machines = 2;
  std::uint64_t words_per_machine = 1024;
  bool enforce_caps = true;
  std::uint64_t seed = 0;
  // 0 selects the default 64*ceil(log2 n)+64.
  std::uint64_t round_ceiling = 0;

  void validate() const;
};

enum class SpaceClass { Polylog, Linear };

// ceil(c*(n/m)*log2^2 n) or ceil(c*(n^{4/3}/m)*log2^2 n), never below 16m.
std::uint64_t default_words_per_machine(std::uint64_t n, std::uint32_t m, SpaceClass cls,
                                        double c = 8.0);

struct Message {
  MachineId sender = 0;
  MachineId receiver = 0;
  Payload payload;
  std::uint64_t sequence = 0;
};

using Inbox = std::vector<Message>;

struct RoundMetrics {
  std::uint64_t round_index = 0;
  std::uint64_t max_resident_words = 0;
  std::uint64_t max_sent_words = 0;
  std::uint64_t max_received_words = 0;
  std::uint64_t total_words_moved = 0;

  bool operator==(const RoundMetrics&) const = default;
};

enum class CapKind { Resident, Sent, Received };
const char* cap_kind_name(CapKind k);

class CapExceeded : public Error {
 public:
  CapExceeded(MachineId machine, std::uint64_t round, CapKind kind, std::uint64_t used,
              std::uint64_t cap);
  MachineId machine;
  std::uint64_t round;
  CapKind cap_kind;
  std::uint64_t used;
  std::uint64_t cap;
};

// Routes pending messages to per-machine inboxes sorted by (sender, sequence).
std::vector<Inbox> exchange(std::vector<Message> pending, std::uint32_t machines);

class Cluster {
 public:
  class Context {
   public:
    MachineId id() const { return id_; }
    std::uint64_t round() const { return round_; }
    std::uint32_t machines() const { return machines_; }
    const Inbox& inbox() const { return *inbox_; }
    void send(MachineId to, Payload payload);
    // m point-to-point copies.
    void broadcast(const Payload& payload);
    void set_resident(std::uint64_t words) { *resident_ = words; }

   private:
    friend class Cluster;
    MachineId id_ = 0;
    std::uint64_t round_ = 0;
    std::uint32_t machines_ = 0;
    const Inbox* inbox_ = nullptr;
    std::uint64_t* resident_ = nullptr;
    std::vector<Message>* out_ = nullptr;
    std::uint64_t seq_ = 0;
    std::uint64_t sent_ = 0;
  };

  using Step = std::function<void(Context&)>;

  Cluster(ClusterConfig config, std::uint64_t problem_size);

  // One synchronous round: every machine steps, then the barrier exchange.
  void round(const Step& step);

  bool has_pending() const;
  std::uint32_t machines() const { return config_.machines; }
  std::uint64_t words_per_machine() const { return config_.words_per_machine; }
  const ClusterConfig& config() const { return config_; }
  std::uint64_t rounds() const { return metrics_.size(); }
  std::uint64_t ceiling() const { return ceiling_; }
  const std::vector<RoundMetrics>& metrics() const { return metrics_; }
  std::uint64_t max_resident() const;
  std::uint64_t max_sent() const;
  std::uint64_t max_received() const;

 private:
  ClusterConfig config_;
  std::uint64_t ceiling_;
  std::vector<Inbox> inboxes_;
  std::vector<std::uint64_t> resident_;
  std::vector<RoundMetrics> metrics_;
};

// Generic driver: a machine program edits its own state and may halt.
class MachineStep {
 public:
  MachineStep(Cluster::Context& ctx, Payload& state) : ctx_(ctx), state_(state) {}
  MachineId id() const { return ctx_.id(); }
  std::uint64_t round() const { return ctx_.round(); }
  std::uint32_t machines() const { return ctx_.machines(); }
  const Inbox& inbox() const { return ctx_.inbox(); }
  Payload& state() { return state_; }
  void send(MachineId to, Payload p) { ctx_.send(to, std::move(p)); }
  void halt() { halted_ = true; }
  bool halted() const { return halted_; }

 private:
  Cluster::Context& ctx_;
  Payload& state_;
  bool halted_ = false;
};

using Program = std::function<void(MachineStep&)>;

struct SimulationResult {
  std::vector<Payload> outputs;
  std::vector<RoundMetrics> metrics;
};

// Runs until every machine halts in a round that sends nothing.
SimulationResult run_simulation(const Program& program, const ClusterConfig& config,
                                std::vector<Payload> shards);

std::string metrics_json(const std::vector<RoundMetrics>& metrics);

// Per-destination batching so one round sends at most one message per pair.
class Outbox {
 public:
  explicit Outbox(std::uint32_t machines) : buf_(machines) {}
  Payload& to(MachineId id) { return buf_[id]; }
  void flush(Cluster::Context& ctx) {
    for (MachineId id = 0; id < buf_.size(); ++id) {
      if (buf_[id].empty()) continue;
      ctx.send(id, std::move(buf_[id]));
      buf_[id].clear();
    }
  }

 private:
  std::vector<Payload> buf_;
};

}  // namespace mpcdp
