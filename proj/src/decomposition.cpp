#include "mpcdp/decomposition.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace mpcdp {

namespace {

enum Tag : Word {
  kMerge = 1,
  kReparent,
  kUpInfo,
  kDownInfo,
  kCount,
  kTarget,
  kAnc,
  kUp,
  kBit,
};

enum class Phase { Start, Select, Doubling, Done };

void put_ext(Payload& out, const ExtVertex& v) {
  out.insert(out.end(), {v.index, v.parent, static_cast<Word>(v.weight.num),
                         static_cast<Word>(v.weight.den),
                         Word{v.has_weight} | (Word{v.aux} << 1) | (Word{v.nchild} << 2),
                         v.child[0], v.child[1]});
}

ExtVertex get_ext(const Payload& in, std::size_t& i) {
  ExtVertex v;
  v.index = in[i];
  v.parent = in[i + 1];
  v.weight.num = static_cast<std::int64_t>(in[i + 2]);
  v.weight.den = static_cast<std::int64_t>(in[i + 3]);
  v.has_weight = in[i + 4] & 1;
  v.aux = (in[i + 4] >> 1) & 1;
  v.nchild = static_cast<std::uint8_t>(in[i + 4] >> 2);
  v.child[0] = in[i + 5];
  v.child[1] = in[i + 6];
  i += 7;
  return v;
}

std::uint64_t resident_of(const std::map<std::uint64_t, LiveComponent>& comps) {
  std::uint64_t w = 0;
  for (const auto& [id, c] : comps)
    w += 8 + c.children.size() + c.slots.size() + 3 * c.child_info.size() +
         c.vertices.size() * ExtVertex::kWords;
  return w;
}

void erase_value(std::vector<std::uint64_t>& v, std::uint64_t x) {
  v.erase(std::remove(v.begin(), v.end(), x), v.end());
}

void apply_merge_record(std::map<std::uint64_t, LiveComponent>& comps, const Payload& p,
                        std::size_t& i) {
  if (p[i] == kReparent) {
    comps.at(p[i + 1]).parent = p[i + 2];
    i += 3;
    return;
  }
  auto& t = comps.at(p[i + 1]);
  const auto from = p[i + 2];
  const auto nout = p[i + 3];
  erase_value(t.children, from);
  i += 4;
  for (std::uint64_t k = 0; k < nout; ++k) t.children.push_back(p[i++]);
  const auto nv = p[i++];
  for (std::uint64_t k = 0; k < nv; ++k) t.vertices.push_back(get_ext(p, i));
}

}  // namespace

const Component& Decomposition::find(std::uint64_t id) const {
  auto it = std::lower_bound(components.begin(), components.end(), id,
                             [](const Component& c, std::uint64_t k) { return c.id < k; });
  if (it == components.end() || it->id != id)
    throw Error(ErrorKind::InvalidArgument, "no component " + std::to_string(id));
  return *it;
}

bool select_rule(const SelectInput& in) {
  if (in.is_root) return true;
  if (in.child_count == 2) return true;
  if (in.parent_completed) return true;
  if (in.child_count == 1) return in.coin;
  return false;
}

HashFn coin_hash(std::uint64_t seed, std::uint64_t iteration, std::uint64_t domain,
                 std::uint32_t machines) {
  auto rng = make_rng({seed, 0x636f696eULL, iteration});
  return sample_hash(rng(), default_hash_order(machines), domain, 2);
}

std::map<std::uint64_t, std::uint64_t> merge_targets(const ComponentTree& ct,
                                                     const std::map<std::uint64_t, bool>& selected,
                                                     const std::map<std::uint64_t, bool>& completed) {
  std::map<std::uint64_t, std::uint64_t> out;
  for (const auto& [id, par] : ct.parent) {
    if (completed.at(id) || selected.at(id)) continue;
    std::uint64_t a = par;
    while (a != kRoot && !selected.at(a)) a = ct.parent.at(a);
    out[id] = a;
  }
  return out;
}

ComponentTree contract(const Decomposition& d) {
  ComponentTree ct;
  std::unordered_map<std::uint64_t, std::uint64_t> owner;
  for (const auto& c : d.components)
    for (auto v : c.vertices) owner[v] = c.id;
  for (const auto& c : d.components) {
    ct.parent[c.id] = kRoot;
    ct.children[c.id];
  }
  for (const auto& c : d.components) {
    for (const auto& e : c.outer) {
      if (e.up) {
        ct.parent[c.id] = owner.at(e.outer);
      } else {
        auto& ch = ct.children[c.id];
        const auto o = owner.at(e.outer);
        if (std::find(ch.begin(), ch.end(), o) == ch.end()) ch.push_back(o);
      }
    }
  }
  for (auto& [id, ch] : ct.children) std::sort(ch.begin(), ch.end());
  for (const auto& [id, p] : ct.parent)
    if (p == kRoot) ct.root = id;
  return ct;
}

bool check_decomposition(const Tree& tb, const std::vector<Component>& comps, std::string* why) {
  auto fail = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  std::unordered_map<std::uint64_t, std::uint64_t> owner;
  std::size_t total = 0;
  for (const auto& c : comps) {
    for (auto v : c.vertices) {
      if (!tb.contains(v)) return fail("unknown vertex " + std::to_string(v));
      if (!owner.emplace(v, c.id).second) return fail("vertex in two components " + std::to_string(v));
    }
    total += c.vertices.size();
  }
  if (total != tb.size()) return fail("partition misses vertices");
  std::size_t roots = 0;
  for (const auto& c : comps) {
    std::size_t tops = 0;
    std::uint64_t top = 0;
    std::vector<std::uint64_t> kid_comps;
    for (auto v : c.vertices) {
      const auto p = tb.at(v).parent;
      if (p == kRoot || owner.at(p) != c.id) {
        ++tops;
        top = v;
      }
      for (auto ch : tb.children(v)) {
        const auto o = owner.at(ch);
        if (o != c.id && std::find(kid_comps.begin(), kid_comps.end(), o) == kid_comps.end())
          kid_comps.push_back(o);
      }
    }
    if (tops != 1) return fail("component " + std::to_string(c.id) + " is not connected");
    if (top != c.id) return fail("component id is not its root vertex " + std::to_string(c.id));
    if (tb.at(top).parent == kRoot) ++roots;
    if (kid_comps.size() > 2) return fail("component " + std::to_string(c.id) + " has >2 children");
    std::sort(kid_comps.begin(), kid_comps.end());
    auto listed = c.children;
    std::sort(listed.begin(), listed.end());
    if (listed != kid_comps) return fail("child list mismatch at " + std::to_string(c.id));
    const std::uint64_t par = tb.at(top).parent == kRoot ? kRoot : owner.at(tb.at(top).parent);
    if (par != c.parent) return fail("parent mismatch at " + std::to_string(c.id));
  }
  if (roots != 1) return fail("component tree has " + std::to_string(roots) + " roots");
  return true;
}

std::string dump_decomposition(const Decomposition& d) {
  std::ostringstream os;
  for (const auto& c : d.components) {
    os << c.id << ":";
    for (auto v : c.vertices) os << ' ' << v;
    os << " |";
    for (const auto& e : c.outer) os << ' ' << e.inner << (e.up ? "^" : "v") << e.outer;
    os << '\n';
  }
  return os.str();
}

std::vector<ExtVertex> ext_vertices(const Tree& tb) {
  std::vector<ExtVertex> out;
  out.reserve(tb.size());
  for (const auto& tv : tb.vertices()) {
    ExtVertex v;
    v.index = tv.index;
    v.parent = tv.parent;
    v.aux = tv.aux;
    if (tv.weight) {
      v.weight = *tv.weight;
      v.has_weight = true;
    }
    const auto& ch = tb.children(tv.index);
    if (ch.size() > 2) throw Error(ErrorKind::InvalidArgument, "tree is not binary");
    v.nchild = static_cast<std::uint8_t>(ch.size());
    for (std::size_t j = 0; j < ch.size(); ++j) v.child[j] = ch[j];
    out.push_back(v);
  }
  return out;
}

Decomposer::Decomposer(Cluster& cluster, const HashFn& h, std::uint64_t n, std::uint64_t seed)
    : cluster_(cluster), h_(h), n_(std::max<std::uint64_t>(n, 1)), seed_(seed),
      m_(cluster.machines()), threshold_((n_ + m_ - 1) / m_), live_(m_) {}

std::vector<Component> Decomposer::gather() const {
  std::unordered_map<std::uint64_t, std::uint64_t> owner;
  for (const auto& loc : live_)
    for (const auto& [id, c] : loc)
      for (const auto& v : c.vertices) owner[v.index] = id;
  std::vector<Component> out;
  for (const auto& loc : live_) {
    for (const auto& [id, c] : loc) {
      Component o;
      o.id = id;
      o.parent = c.parent;
      o.children = c.children;
      std::sort(o.children.begin(), o.children.end());
      o.completed = c.completed;
      for (const auto& v : c.vertices) {
        o.vertices.push_back(v.index);
        if (v.parent != kRoot && owner.at(v.parent) != id) o.outer.push_back({v.index, v.parent, true});
        for (int j = 0; j < v.nchild; ++j)
          if (owner.at(v.child[j]) != id) o.outer.push_back({v.index, v.child[j], false});
      }
      std::sort(o.vertices.begin(), o.vertices.end());
      std::sort(o.outer.begin(), o.outer.end(), [](const OuterEdge& a, const OuterEdge& b) {
        return a.inner != b.inner ? a.inner < b.inner : a.outer < b.outer;
      });
      out.push_back(std::move(o));
    }
  }
  std::sort(out.begin(), out.end(), [](const Component& a, const Component& b) { return a.id < b.id; });
  return out;
}

Decomposition Decomposer::run(const Initial& initial) {
  const auto start = cluster_.rounds();
  const std::uint64_t loop_bound = 14ULL * m_;
  const int lg = std::max(1, ceil_log2(n_));
  const std::uint64_t doubling_cap = static_cast<std::uint64_t>(ceil_log2(2ULL * lg)) + 3;

  Decomposition result;
  result.threshold = threshold_;
  Phase phase = Phase::Start;
  std::uint64_t iteration = 0;
  std::uint64_t doubling = 0;
  HashFn coins;
  std::vector<Phase> next(m_, Phase::Done);

  // Info round body: absorb merges, mark completion, exchange neighbour info.
  auto info_round = [&](Cluster::Context& ctx, bool first, bool read_inbox) {
    const auto id = ctx.id();
    auto& comps = live_[id];
    // Components merged last iteration have already shipped their vertices.
    for (auto it = comps.begin(); it != comps.end();) it = it->second.found ? comps.erase(it) : std::next(it);
    if (first) {
      for (const auto& v : initial(ctx)) {
        LiveComponent c;
        c.id = v.index;
        c.parent = v.parent;
        for (int j = 0; j < v.nchild; ++j) c.children.push_back(v.child[j]);
        c.vertices.push_back(v);
        comps.emplace(c.id, std::move(c));
      }
    }
    for (const auto& msg : ctx.inbox()) {
      if (!read_inbox) break;
      const auto& p = msg.payload;
      for (std::size_t i = 0; i < p.size();) {
        switch (p[i]) {
          case kMerge:
          case kReparent:
            apply_merge_record(comps, p, i);
            break;
          case kTarget:
          case kAnc:
            i += 4;
            break;
          case kUp:
            i += 4;
            break;
          case kBit:
            i += 2;
            break;
          default:
            throw Error(ErrorKind::InvalidArgument, "unexpected record in info round");
        }
      }
    }
    std::uint64_t done = 0;
    Outbox out(m_);
    for (auto& [cid, c] : comps) {
      if (!c.completed && c.vertices.size() >= threshold_) c.completed = true;
      done += c.completed;
      c.child_info.clear();
      c.slots.clear();
      c.selected = c.found = c.merge_sent = c.parent_completed = false;
      if (c.parent != kRoot) {
        auto& b = out.to(h_.machine(c.parent));
        b.insert(b.end(), {kUpInfo, c.parent, cid, Word{c.completed}, c.children.size()});
      }
      for (auto ch : c.children) {
        auto& b = out.to(h_.machine(ch));
        b.insert(b.end(), {kDownInfo, ch, Word{c.completed}});
      }
    }
    for (MachineId to = 0; to < m_; ++to) out.to(to).insert(out.to(to).end(), {kCount, comps.size(), done});
    out.flush(ctx);
    ctx.set_resident(resident_of(comps) + h_.k() + 4);
    next[id] = Phase::Select;
  };

  // Sends this round's doubling traffic for every participating component.
  auto push = [&](std::map<std::uint64_t, LiveComponent>& comps, Outbox& out) {
    for (auto& [cid, c] : comps) {
      if (c.completed) continue;
      const bool settled = c.selected || c.found;
      for (auto d : c.slots) {
        auto& b = out.to(h_.machine(d));
        if (settled) b.insert(b.end(), {kTarget, d, c.selected ? cid : c.target, c.selected ? 0 : c.dist});
        else b.insert(b.end(), {kAnc, d, c.anc, c.dist});
      }
      if (!settled) {
        auto& b = out.to(h_.machine(c.anc));
        b.insert(b.end(), {kUp, c.anc, cid, c.slots.empty() ? kRoot : c.slots.front()});
      }
    }
  };

  auto all_found = [](const std::map<std::uint64_t, LiveComponent>& comps) {
    for (const auto& [cid, c] : comps)
      if (!c.completed && !c.selected && !c.found) return false;
    return true;
  };

  auto send_merges = [&](std::map<std::uint64_t, LiveComponent>& comps, Outbox& out) {
    for (auto& [cid, c] : comps) {
      if (!c.found || c.merge_sent) continue;
      c.merge_sent = true;
      // Children outside the chain stay and hang from the target.
      std::vector<std::uint64_t> keep;
      for (auto ch : c.children) {
        const auto& [ch_done, ch_kids] = c.child_info.at(ch);
        const bool chain =
            !ch_done && !select_rule({false, static_cast<std::size_t>(ch_kids), false, coins.eval(ch) == 1});
        if (chain) continue;
        keep.push_back(ch);
        auto& r = out.to(h_.machine(ch));
        r.insert(r.end(), {kReparent, ch, c.target});
      }
      auto& b = out.to(h_.machine(c.target));
      b.insert(b.end(), {kMerge, c.target, cid, keep.size()});
      b.insert(b.end(), keep.begin(), keep.end());
      b.push_back(c.vertices.size());
      for (const auto& v : c.vertices) put_ext(b, v);
      c.vertices.clear();
      c.vertices.shrink_to_fit();
    }
  };

  while (phase != Phase::Done) {
    if (phase == Phase::Start) {
      cluster_.round([&](Cluster::Context& ctx) { info_round(ctx, true, false); });
      if (snapshot_) snapshot_(iteration, gather());
      phase = next[0];
      continue;
    }
    if (phase == Phase::Select) {
      std::uint64_t total = 0, done = 0;
      coins = coin_hash(seed_, iteration + 1, h_.domain_size, m_);
      cluster_.round([&](Cluster::Context& ctx) {
        const auto id = ctx.id();
        auto& comps = live_[id];
        std::uint64_t ctotal = 0, cdone = 0;
        for (const auto& msg : ctx.inbox()) {
          const auto& p = msg.payload;
          for (std::size_t i = 0; i < p.size();) {
            if (p[i] == kUpInfo) {
              comps.at(p[i + 1]).child_info[p[i + 2]] = {p[i + 3] != 0, p[i + 4]};
              i += 5;
            } else if (p[i] == kDownInfo) {
              comps.at(p[i + 1]).parent_completed = p[i + 2] != 0;
              i += 3;
            } else {
              ctotal += p[i + 1];
              cdone += p[i + 2];
              i += 3;
            }
          }
        }
        if (id == 0) {
          total = ctotal;
          done = cdone;
        }
        if (ctotal <= loop_bound) {
          next[id] = Phase::Done;
          ctx.set_resident(resident_of(comps) + h_.k() + 4);
          return;
        }
        for (auto& [cid, c] : comps) {
          if (c.completed) continue;
          c.selected = select_rule({c.parent == kRoot, c.children.size(), c.parent_completed,
                                    coins.eval(cid) == 1});
          c.anc = c.parent;
          c.dist = 1;
          for (auto ch : c.children) {
            const auto& [ch_done, ch_kids] = c.child_info.at(ch);
            if (ch_done) continue;
            // A child's parent-completed flag is this component's own.
            const bool ch_sel = select_rule({false, static_cast<std::size_t>(ch_kids), false,
                                             coins.eval(ch) == 1});
            if (!ch_sel) c.slots.push_back(ch);
          }
        }
        Outbox out(m_);
        push(comps, out);
        const Word bit = all_found(comps);
        for (MachineId to = 0; to < m_; ++to) out.to(to).insert(out.to(to).end(), {kBit, bit});
        out.flush(ctx);
        ctx.set_resident(resident_of(comps) + h_.k() + 4);
        next[id] = Phase::Doubling;
      });
      if (next[0] == Phase::Done) {
        phase = Phase::Done;
        break;
      }
      ++iteration;
      IterationStats st;
      st.components = total;
      st.completed = done;
      for (const auto& loc : live_)
        for (const auto& [cid, c] : loc) st.selected += c.selected;
      result.iterations.push_back(st);
      doubling = 0;
      phase = Phase::Doubling;
      continue;
    }
    // Doubling round.
    if (++doubling > doubling_cap)
      throw Error(ErrorKind::NonTermination,
                  "closest selected ancestor not found within " + std::to_string(doubling_cap) +
                      " doubling rounds");
    cluster_.round([&](Cluster::Context& ctx) {
      const auto id = ctx.id();
      auto& comps = live_[id];
      bool everyone = true;
      std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint64_t, std::uint64_t>>> ups;
      for (const auto& msg : ctx.inbox()) {
        const auto& p = msg.payload;
        for (std::size_t i = 0; i < p.size();) {
          switch (p[i]) {
            case kTarget: {
              auto& c = comps.at(p[i + 1]);
              if (!c.found && !c.selected) {
                c.found = true;
                c.target = p[i + 2];
                c.dist += p[i + 3];
              }
              i += 4;
              break;
            }
            case kAnc: {
              auto& c = comps.at(p[i + 1]);
              if (!c.found) {
                c.anc = p[i + 2];
                c.dist += p[i + 3];
              }
              i += 4;
              break;
            }
            case kUp:
              ups[p[i + 1]].emplace_back(p[i + 2], p[i + 3]);
              i += 4;
              break;
            case kBit:
              everyone = everyone && p[i + 1] != 0;
              i += 2;
              break;
            case kMerge:
            case kReparent:
              // Targets and reparented children sit outside every chain, so
              // applying these early cannot disturb the doubling state.
              apply_merge_record(comps, p, i);
              break;
            default:
              throw Error(ErrorKind::InvalidArgument, "unexpected record in doubling round");
          }
        }
      }
      if (everyone) {
        // The inbox was consumed above.
        info_round(ctx, false, false);
        return;
      }
      for (auto& [cid, c] : comps) {
        if (c.completed) continue;
        std::vector<std::uint64_t> slots;
        auto it = ups.find(cid);
        if (it != ups.end())
          for (auto s : c.slots)
            for (const auto& [from, nd] : it->second)
              if (from == s && nd != kRoot) slots.push_back(nd);
        c.slots = std::move(slots);
      }
      Outbox out(m_);
      send_merges(comps, out);
      push(comps, out);
      const Word bit = all_found(comps);
      for (MachineId to = 0; to < m_; ++to) out.to(to).insert(out.to(to).end(), {kBit, bit});
      out.flush(ctx);
      ctx.set_resident(resident_of(comps) + h_.k() + 4);
      next[id] = Phase::Doubling;
    });
    auto& st = result.iterations.back();
    if (next[0] == Phase::Select) {
      st.doubling_rounds = doubling - 1;
      for (const auto& loc : live_)
        for (const auto& [cid, c] : loc) st.max_size = std::max<std::uint64_t>(st.max_size, c.vertices.size());
      if (snapshot_) snapshot_(iteration, gather());
      phase = Phase::Select;
    } else {
      for (const auto& loc : live_)
        for (const auto& [cid, c] : loc)
          if (c.found) st.max_path = std::max(st.max_path, c.dist);
    }
  }
  result.components = gather();
  result.rounds = cluster_.rounds() - start;
  return result;
}

Decomposition decompose(const Tree& tb, Cluster& cluster, std::uint64_t seed, Snapshot snapshot) {
  const auto m = cluster.machines();
  const HashFn h = sample_hash(seed, default_hash_order(m), tb.max_index() + 1, m);
  auto all = ext_vertices(tb);
  Decomposer dec(cluster, h, tb.size(), seed);
  if (snapshot) dec.set_snapshot(std::move(snapshot));
  return dec.run([&](Cluster::Context& ctx) {
    std::vector<ExtVertex> mine;
    for (const auto& v : all)
      if (h.machine(v.index) == ctx.id()) mine.push_back(v);
    return mine;
  });
}

}  // namespace mpcdp
