#include "mpcdp/tree.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

namespace mpcdp {

namespace {

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorKind::ParseError, "bad integer '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorKind::ParseError, "bad index '" + s + "'");
  return v;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw Error(ErrorKind::InvalidArgument, "zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num = g ? n / g : 0;
  den = g ? d / g : 1;
}

Rational Rational::parse(const std::string& text) {
  if (text.empty()) throw Error(ErrorKind::ParseError, "empty weight");
  if (auto slash = text.find('/'); slash != std::string::npos)
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  if (auto dot = text.find('.'); dot != std::string::npos) {
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (frac.size() > 15) throw Error(ErrorKind::ParseError, "too many decimals in '" + text + "'");
    const bool neg = !whole.empty() && whole[0] == '-';
    if (whole.empty() || whole == "-") whole += "0";
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t w = parse_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    const std::int64_t mag = (w < 0 ? -w : w) * den + f;
    return Rational(neg ? -mag : mag, den);
  }
  return Rational(parse_int(text), 1);
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Tree::Tree(std::vector<TreeVertex> vertices) : vertices_(std::move(vertices)) {
  pos_.reserve(vertices_.size() * 2);
  for (std::uint32_t i = 0; i < vertices_.size(); ++i) {
    const auto idx = vertices_[i].index;
    if (idx == 0) throw Error(ErrorKind::ParseError, "vertex index 0 is reserved for the root marker");
    if (!pos_.emplace(idx, i).second)
      throw Error(ErrorKind::DuplicateIndex, "index " + std::to_string(idx));
    max_index_ = std::max(max_index_, idx);
  }
  children_.assign(vertices_.size(), {});
  std::size_t roots = 0;
  for (const auto& v : vertices_) {
    if (v.parent == kRoot) {
      ++roots;
      root_ = v.index;
      continue;
    }
    auto it = pos_.find(v.parent);
    if (it == pos_.end())
      throw Error(ErrorKind::MissingParent,
                  "parent " + std::to_string(v.parent) + " of " + std::to_string(v.index));
    children_[it->second].push_back(v.index);
  }
  if (roots > 1) throw Error(ErrorKind::MultipleRoots, std::to_string(roots) + " roots");
  if (roots == 0 && !vertices_.empty()) throw Error(ErrorKind::CycleDetected, "no root");
  for (auto& ch : children_) std::sort(ch.begin(), ch.end());
  if (vertices_.empty()) return;
  preorder_.reserve(vertices_.size());
  std::vector<std::uint64_t> stack{root_};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    preorder_.push_back(v);
    const auto& ch = children_[pos_.at(v)];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  if (preorder_.size() != vertices_.size())
    throw Error(ErrorKind::CycleDetected, "vertices unreachable from the root");
}

std::uint32_t Tree::pos(std::uint64_t index) const {
  auto it = pos_.find(index);
  return it == pos_.end() ? npos : it->second;
}

const TreeVertex& Tree::at(std::uint64_t index) const {
  const auto p = pos(index);
  if (p == npos) throw Error(ErrorKind::InvalidArgument, "unknown vertex " + std::to_string(index));
  return vertices_[p];
}

const std::vector<std::uint64_t>& Tree::children(std::uint64_t index) const {
  const auto p = pos(index);
  if (p == npos) throw Error(ErrorKind::InvalidArgument, "unknown vertex " + std::to_string(index));
  return children_[p];
}

std::size_t Tree::original_count() const {
  return static_cast<std::size_t>(
      std::count_if(vertices_.begin(), vertices_.end(), [](const TreeVertex& v) { return !v.aux; }));
}

bool Tree::has_weights() const {
  return std::any_of(vertices_.begin(), vertices_.end(),
                     [](const TreeVertex& v) { return v.weight.has_value(); });
}

Tree parse_tree(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line(line)) throw Error(ErrorKind::ParseError, "missing header");
  std::uint64_t n = 0;
  {
    std::istringstream hs(line);
    std::string tok;
    hs >> tok;
    n = parse_uint(tok);
  }
  std::vector<TreeVertex> vs;
  vs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!next_line(line))
      throw Error(ErrorKind::ParseError, "expected " + std::to_string(n) + " vertex lines");
    std::istringstream ls(line);
    std::string a, b, c, extra;
    if (!(ls >> a >> b)) throw Error(ErrorKind::ParseError, "bad vertex line '" + line + "'");
    TreeVertex v;
    v.index = parse_uint(a);
    v.parent = parse_uint(b);
    if (ls >> c) v.weight = Rational::parse(c);
    if (ls >> extra) throw Error(ErrorKind::ParseError, "trailing token in '" + line + "'");
    vs.push_back(std::move(v));
  }
  if (next_line(line)) throw Error(ErrorKind::ParseError, "more vertex lines than the header states");
  return Tree(std::move(vs));
}

std::string emit_tree(const Tree& t) {
  std::vector<const TreeVertex*> order;
  order.reserve(t.size());
  for (const auto& v : t.vertices()) order.push_back(&v);
  std::sort(order.begin(), order.end(),
            [](const TreeVertex* a, const TreeVertex* b) { return a->index < b->index; });
  std::string out = std::to_string(t.size()) + "\n";
  for (const auto* v : order) {
    out += std::to_string(v->index) + " " + std::to_string(v->parent);
    if (v->weight) out += " " + v->weight->str();
    out += "\n";
  }
  return out;
}

const std::vector<TreeKind>& all_tree_kinds() {
  static const std::vector<TreeKind> kinds{TreeKind::Path,        TreeKind::FullBinary,
                                           TreeKind::Star,        TreeKind::Caterpillar,
                                           TreeKind::RandomRecursive, TreeKind::Broom};
  return kinds;
}

std::string tree_kind_name(TreeKind k) {
  switch (k) {
    case TreeKind::Path: return "path";
    case TreeKind::FullBinary: return "full_binary";
    case TreeKind::Star: return "star";
    case TreeKind::Caterpillar: return "caterpillar";
    case TreeKind::RandomRecursive: return "random_recursive";
    case TreeKind::Broom: return "broom";
  }
  return "?";
}

TreeKind parse_tree_kind(const std::string& name) {
  for (auto k : all_tree_kinds())
    if (tree_kind_name(k) == name) return k;
  throw Error(ErrorKind::InvalidArgument, "unknown tree kind '" + name + "'");
}

WeightDist WeightDist::parse(const std::string& text) {
  WeightDist d;
  if (text == "none") return d;
  if (text == "unit") {
    d.kind = Kind::Unit;
    return d;
  }
  if (text.rfind("uniform:", 0) == 0) {
    const auto rest = text.substr(8);
    const auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "expected uniform:lo:hi");
    d.kind = Kind::Uniform;
    d.lo = parse_int(rest.substr(0, colon));
    d.hi = parse_int(rest.substr(colon + 1));
    if (d.lo > d.hi || d.lo < 0) throw Error(ErrorKind::InvalidArgument, "bad weight range");
    return d;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown weight distribution '" + text + "'");
}

Tree gen_tree(TreeKind kind, std::size_t n, std::uint64_t seed, WeightDist weights) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  auto rng = make_rng({seed, 0x747265650000ULL + static_cast<std::uint64_t>(kind), n});
  std::vector<std::uint64_t> parent(n + 1, 0);
  switch (kind) {
    case TreeKind::Path:
      for (std::size_t i = 2; i <= n; ++i) parent[i] = i - 1;
      break;
    case TreeKind::FullBinary:
      for (std::size_t i = 2; i <= n; ++i) parent[i] = i / 2;
      break;
    case TreeKind::Star:
      for (std::size_t i = 2; i <= n; ++i) parent[i] = 1;
      break;
    case TreeKind::Caterpillar: {
      const std::size_t spine = (n + 1) / 2;
      for (std::size_t i = 2; i <= spine; ++i) parent[i] = i - 1;
      for (std::size_t i = spine + 1; i <= n; ++i) parent[i] = 1 + rng() % spine;
      break;
    }
    case TreeKind::RandomRecursive:
      for (std::size_t i = 2; i <= n; ++i) parent[i] = 1 + rng() % (i - 1);
      break;
    case TreeKind::Broom: {
      const std::size_t handle = (n + 1) / 2;
      for (std::size_t i = 2; i <= handle; ++i) parent[i] = i - 1;
      for (std::size_t i = handle + 1; i <= n; ++i) parent[i] = handle;
      break;
    }
  }
  std::vector<TreeVertex> vs(n);
  for (std::size_t i = 1; i <= n; ++i) {
    auto& v = vs[i - 1];
    v.index = i;
    v.parent = parent[i];
    if (v.parent == kRoot) continue;
    switch (weights.kind) {
      case WeightDist::Kind::None: break;
      case WeightDist::Kind::Unit: v.weight = Rational(1); break;
      case WeightDist::Kind::Uniform: {
        const auto span = static_cast<std::uint64_t>(weights.hi - weights.lo) + 1;
        v.weight = Rational(weights.lo + static_cast<std::int64_t>(rng() % span));
        break;
      }
    }
  }
  return Tree(std::move(vs));
}

std::int64_t IntegerWeights::of(std::uint64_t index) const {
  auto it = weight.find(index);
  return it == weight.end() ? 0 : it->second;
}

IntegerWeights integer_weights(const Tree& t) {
  IntegerWeights w;
  for (const auto& v : t.vertices()) {
    if (!v.weight) continue;
    w.scale = std::lcm(w.scale, v.weight->den);
  }
  for (const auto& v : t.vertices()) {
    if (v.parent == kRoot || v.aux) continue;
    std::int64_t x = w.scale;
    if (v.weight) x = v.weight->num * (w.scale / v.weight->den);
    w.weight[v.index] = x;
  }
  return w;
}

Tree compact_indexes(const Tree& t, std::unordered_map<std::uint64_t, std::uint64_t>* mapping) {
  std::unordered_map<std::uint64_t, std::uint64_t> map;
  map.reserve(t.size() * 2);
  std::uint64_t next = 1;
  for (auto v : t.preorder()) map[v] = next++;
  std::vector<TreeVertex> vs;
  vs.reserve(t.size());
  for (auto old : t.preorder()) {
    TreeVertex v = t.at(old);
    v.index = map[old];
    v.parent = v.parent == kRoot ? kRoot : map[v.parent];
    vs.push_back(std::move(v));
  }
  if (mapping) *mapping = std::move(map);
  return Tree(std::move(vs));
}

ShardedTree shard(const Tree& t, const HashFn& h) {
  ShardedTree st;
  st.hash = h;
  st.local.assign(h.range_size, {});
  std::vector<std::uint64_t> load(h.range_size, 0);
  for (const auto& v : t.vertices()) {
    const auto mach = h.machine(v.index);
    st.local[mach].push_back(v.index);
    load[mach] += 1 + v.payload.size();
  }
  for (auto& l : st.local) std::sort(l.begin(), l.end());
  for (auto l : load) st.max_load = std::max(st.max_load, l);
  return st;
}

}  // namespace mpcdp
