#include "ptsim/discovery.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>

namespace ptsim {
namespace {

// Sub-logs are multisets of traces keyed by activity sequence.
using SubLog = std::map<ActivitySequence, std::size_t>;
using Part = std::set<std::string>;

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Graph {
  std::vector<std::string> names;  // sorted
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<bool>> edge;
  std::vector<bool> is_start;
  std::vector<bool> is_end;

  explicit Graph(const SubLog& log) {
    Part alphabet;
    for (const auto& [seq, _] : log) alphabet.insert(seq.begin(), seq.end());
    names.assign(alphabet.begin(), alphabet.end());
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
    const std::size_t n = names.size();
    edge.assign(n, std::vector<bool>(n, false));
    is_start.assign(n, false);
    is_end.assign(n, false);
    for (const auto& [seq, _] : log) {
      if (seq.empty()) continue;
      is_start[index[seq.front()]] = true;
      is_end[index[seq.back()]] = true;
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) edge[index[seq[i]]][index[seq[i + 1]]] = true;
    }
  }

  std::size_t size() const { return names.size(); }

  // reach[i][j]: a path of length >= 1 leads from i to j.
  std::vector<std::vector<bool>> reachability() const {
    const std::size_t n = size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<std::size_t> stack;
      for (std::size_t j = 0; j < n; ++j) {
        if (edge[s][j] && !reach[s][j]) {
          reach[s][j] = true;
          stack.push_back(j);
        }
      }
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j) {
          if (edge[u][j] && !reach[s][j]) {
            reach[s][j] = true;
            stack.push_back(j);
          }
        }
      }
    }
    return reach;
  }
};

// Groups union-find classes into parts ordered by their smallest activity.
std::vector<Part> collect_parts(const Graph& g, UnionFind& uf, const std::vector<std::size_t>& members) {
  std::map<std::size_t, Part> by_root;
  for (const std::size_t i : members) by_root[uf.find(i)].insert(g.names[i]);
  std::vector<Part> parts;
  for (auto& [_, p] : by_root) parts.push_back(std::move(p));
  std::sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) { return *a.begin() < *b.begin(); });
  return parts;
}

std::vector<std::size_t> all_indices(const Graph& g) {
  std::vector<std::size_t> v(g.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::optional<std::vector<Part>> xor_cut(const Graph& g) {
  UnionFind uf(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g.edge[i][j]) uf.unite(i, j);
    }
  }
  auto parts = collect_parts(g, uf, all_indices(g));
  if (parts.size() < 2) return std::nullopt;
  return parts;
}

std::optional<std::vector<Part>> sequence_cut(const Graph& g) {
  const std::size_t n = g.size();
  const auto reach = g.reachability();

  // Strongly connected components.
  UnionFind scc(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (reach[i][j] && reach[j][i]) scc.unite(i, j);
    }
  }
  // Merge components that cannot reach each other in either direction.
  UnionFind groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (scc.find(i) == scc.find(j)) {
        groups.unite(i, j);
      } else if (!reach[i][j] && !reach[j][i]) {
        groups.unite(i, j);
      }
    }
  }
  auto parts = collect_parts(g, groups, all_indices(g));
  const std::size_t m = parts.size();
  if (m < 2) return std::nullopt;

  std::vector<std::size_t> group_of(n);
  for (std::size_t p = 0; p < m; ++p) {
    for (const auto& a : parts[p]) group_of[g.index.at(a)] = p;
  }
  std::vector<std::vector<bool>> greach(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j] && group_of[i] != group_of[j]) greach[group_of[i]][group_of[j]] = true;
    }
  }
  // Order by number of predecessors; the order must be strict and total.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> preds(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) preds[b] += greach[a][b] ? 1 : 0;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return preds[a] < preds[b]; });
  for (std::size_t x = 0; x < m; ++x) {
    for (std::size_t y = x + 1; y < m; ++y) {
      if (!greach[order[x]][order[y]] || greach[order[y]][order[x]]) return std::nullopt;
    }
  }
  std::vector<Part> ordered;
  for (const std::size_t i : order) ordered.push_back(parts[i]);
  return ordered;
}

std::optional<std::vector<Part>> parallel_cut(const Graph& g) {
  const std::size_t n = g.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(g.edge[i][j] && g.edge[j][i])) uf.unite(i, j);
    }
  }
  auto parts = collect_parts(g, uf, all_indices(g));
  if (parts.size() < 2) return std::nullopt;

  auto complete = [&](const Part& p) {
    bool s = false, e = false;
    for (const auto& a : p) {
      s = s || g.is_start[g.index.at(a)];
      e = e || g.is_end[g.index.at(a)];
    }
    return s && e;
  };
  std::vector<Part> good, bad;
  for (auto& p : parts) (complete(p) ? good : bad).push_back(std::move(p));
  if (good.empty()) return std::nullopt;
  for (const auto& p : bad) good.front().insert(p.begin(), p.end());
  if (good.size() < 2) return std::nullopt;
  std::sort(good.begin(), good.end(), [](const Part& a, const Part& b) { return *a.begin() < *b.begin(); });
  return good;
}

// Returns the do-part first, then redo parts.
std::optional<std::vector<Part>> loop_cut(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<bool> in_do(n, false);
  for (std::size_t i = 0; i < n; ++i) in_do[i] = g.is_start[i] || g.is_end[i];

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_do[i]) rest.push_back(i);
  }
  if (rest.empty()) return std::nullopt;

  UnionFind uf(n);
  for (const std::size_t i : rest) {
    for (const std::size_t j : rest) {
      if (g.edge[i][j]) uf.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (const std::size_t i : rest) comps[uf.find(i)].push_back(i);

  std::vector<std::vector<std::size_t>> redo;
  for (auto& [_, c] : comps) redo.push_back(std::move(c));

  // A redo component may only be entered from end activities (each of them)
  // and only left towards start activities (each of them).
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < redo.size(); ++k) {
      bool body = false;
      for (const std::size_t c : redo[k]) {
        for (std::size_t x = 0; x < n && !body; ++x) {
          if (!in_do[x]) continue;
          if (g.edge[x][c] && !g.is_end[x]) body = true;
          if (g.edge[c][x] && !g.is_start[x]) body = true;
        }
        bool entered = false, left = false;
        for (std::size_t x = 0; x < n; ++x) {
          entered = entered || (g.is_end[x] && g.edge[x][c]);
          left = left || (g.is_start[x] && g.edge[c][x]);
        }
        for (std::size_t x = 0; x < n && !body; ++x) {
          if (entered && g.is_end[x] && !g.edge[x][c]) body = true;
          if (left && g.is_start[x] && !g.edge[c][x]) body = true;
        }
        if (body) break;
      }
      if (body) {
        for (const std::size_t c : redo[k]) in_do[c] = true;
        redo.erase(redo.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        break;
      }
    }
  }
  if (redo.empty()) return std::nullopt;

  std::vector<Part> parts;
  Part body;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_do[i]) body.insert(g.names[i]);
  }
  parts.push_back(std::move(body));
  std::vector<Part> redo_parts;
  for (const auto& c : redo) {
    Part p;
    for (const std::size_t i : c) p.insert(g.names[i]);
    redo_parts.push_back(std::move(p));
  }
  std::sort(redo_parts.begin(), redo_parts.end(),
            [](const Part& a, const Part& b) { return *a.begin() < *b.begin(); });
  parts.insert(parts.end(), redo_parts.begin(), redo_parts.end());
  return parts;
}

std::size_t part_of(const std::vector<Part>& parts, const std::string& a) {
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].count(a)) return i;
  }
  return parts.size();
}

std::vector<SubLog> split_xor(const SubLog& log, const std::vector<Part>& parts) {
  std::vector<SubLog> out(parts.size());
  for (const auto& [seq, n] : log) out[part_of(parts, seq.front())][seq] += n;
  return out;
}

// Projection onto each part; used for sequence and parallel cuts.
std::vector<SubLog> split_project(const SubLog& log, const std::vector<Part>& parts) {
  std::vector<SubLog> out(parts.size());
  for (const auto& [seq, n] : log) {
    std::vector<ActivitySequence> proj(parts.size());
    for (const auto& a : seq) proj[part_of(parts, a)].push_back(a);
    for (std::size_t i = 0; i < parts.size(); ++i) out[i][proj[i]] += n;
  }
  return out;
}

std::vector<SubLog> split_loop(const SubLog& log, const std::vector<Part>& parts) {
  std::vector<SubLog> out(parts.size());
  for (const auto& [seq, n] : log) {
    std::size_t current = part_of(parts, seq.front());
    ActivitySequence segment;
    for (const auto& a : seq) {
      const std::size_t p = part_of(parts, a);
      if (p != current) {
        out[current][segment] += n;
        segment.clear();
        current = p;
      }
      segment.push_back(a);
    }
    out[current][segment] += n;
  }
  return out;
}

Node mine(const SubLog& log) {
  Part alphabet;
  std::size_t empty_traces = 0;
  for (const auto& [seq, n] : log) {
    alphabet.insert(seq.begin(), seq.end());
    if (seq.empty()) empty_traces += n;
  }
  if (alphabet.empty()) return Node::tau();
  if (empty_traces > 0) {
    SubLog rest = log;
    rest.erase(ActivitySequence{});
    return Node::op(NodeKind::Xor, {mine(rest), Node::tau()});
  }
  if (alphabet.size() == 1) {
    const std::string& a = *alphabet.begin();
    const bool single = std::all_of(log.begin(), log.end(), [](const auto& kv) { return kv.first.size() == 1; });
    if (single) return Node::activity(a);
    return Node::op(NodeKind::Loop, {Node::activity(a), Node::tau()});
  }

  const Graph g(log);
  auto recurse = [](NodeKind kind, const std::vector<SubLog>& subs) {
    std::vector<Node> children;
    children.reserve(subs.size());
    for (const auto& s : subs) children.push_back(mine(s));
    return Node::op(kind, std::move(children));
  };
  if (auto parts = xor_cut(g)) return recurse(NodeKind::Xor, split_xor(log, *parts));
  if (auto parts = sequence_cut(g)) return recurse(NodeKind::Sequence, split_project(log, *parts));
  if (auto parts = parallel_cut(g)) return recurse(NodeKind::Parallel, split_project(log, *parts));
  if (auto parts = loop_cut(g)) return recurse(NodeKind::Loop, split_loop(log, *parts));

  std::vector<Node> flower{Node::tau()};
  for (const auto& a : alphabet) flower.push_back(Node::activity(a));
  return Node::op(NodeKind::Loop, std::move(flower));
}

// ---------------------------------------------------------------------------
// Replay

using Symbols = std::vector<int>;

struct NodeInfo {
  std::set<int> alphabet;
  std::size_t min_len = 0;
  std::optional<std::size_t> max_len;
};

struct XorTally {
  std::vector<std::size_t> counts;
};

struct LoopTally {
  std::size_t executions = 0;
  std::size_t executions_with_redo = 0;
  std::size_t max_redo = 0;
};

class Replayer {
 public:
  explicit Replayer(const Node& root) : root_(root) { index(root); }

  int symbol(const std::string& a) const {
    const auto it = symbols_.find(a);
    return it == symbols_.end() ? -1 : it->second;
  }

  Symbols encode(const ActivitySequence& seq) const {
    Symbols out;
    out.reserve(seq.size());
    for (const auto& a : seq) out.push_back(symbol(a));
    return out;
  }

  bool accepts(const Node& n, const Symbols& s) {
    const NodeInfo& info = info_.at(&n);
    if (s.size() < info.min_len || (info.max_len && s.size() > *info.max_len)) return false;
    for (const int x : s) {
      if (!info.alphabet.count(x)) return false;
    }
    const Key key{&n, -1, s};
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    bool result = false;
    switch (n.kind) {
      case NodeKind::Activity: result = s.size() == 1; break;  // alphabet check already done
      case NodeKind::Tau: result = s.empty(); break;
      case NodeKind::Xor:
        for (const auto& c : n.children) {
          if (accepts(c, s)) {
            result = true;
            break;
          }
        }
        break;
      case NodeKind::Sequence: result = sequence_from(n, 0, s); break;
      case NodeKind::Parallel: result = project(n, s).has_value(); break;
      case NodeKind::Loop: result = loop_from(n, s); break;
    }
    memo_[key] = result;
    return result;
  }

  // Walks the first accepting derivation and tallies choices.
  void record(const Node& n, const Symbols& s, NodeId& path, std::size_t weight) {
    switch (n.kind) {
      case NodeKind::Activity:
      case NodeKind::Tau:
        return;
      case NodeKind::Xor: {
        auto& tally = xor_[path];
        tally.counts.resize(n.children.size());
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (accepts(n.children[i], s)) {
            tally.counts[i] += weight;
            path.push_back(i);
            record(n.children[i], s, path, weight);
            path.pop_back();
            return;
          }
        }
        return;
      }
      case NodeKind::Sequence: {
        Symbols rest = s;
        for (std::size_t c = 0; c < n.children.size(); ++c) {
          for (std::size_t k = 0; k <= rest.size(); ++k) {
            Symbols head(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(k));
            Symbols tail(rest.begin() + static_cast<std::ptrdiff_t>(k), rest.end());
            if (accepts(n.children[c], head) && sequence_from(n, c + 1, tail)) {
              path.push_back(c);
              record(n.children[c], head, path, weight);
              path.pop_back();
              rest = std::move(tail);
              break;
            }
          }
        }
        return;
      }
      case NodeKind::Parallel: {
        const auto parts = project(n, s);
        for (std::size_t c = 0; c < n.children.size(); ++c) {
          path.push_back(c);
          record(n.children[c], (*parts)[c], path, weight);
          path.pop_back();
        }
        return;
      }
      case NodeKind::Loop: {
        std::size_t redos = 0;
        Symbols rest = s;
        for (;;) {
          bool advanced = false;
          for (std::size_t k = 0; k <= rest.size() && !advanced; ++k) {
            Symbols body(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(k));
            if (!accepts(n.children[0], body)) continue;
            Symbols after(rest.begin() + static_cast<std::ptrdiff_t>(k), rest.end());
            if (after.empty()) {
              path.push_back(0);
              record(n.children[0], body, path, weight);
              path.pop_back();
              auto& t = loop_[path];
              t.executions += weight;
              if (redos > 0) t.executions_with_redo += weight;
              t.max_redo = std::max(t.max_redo, redos);
              return;
            }
            if (auto step = redo_step(n, after, k > 0)) {
              path.push_back(0);
              record(n.children[0], body, path, weight);
              path.pop_back();
              const auto& [r, m] = *step;
              Symbols redo(after.begin(), after.begin() + static_cast<std::ptrdiff_t>(m));
              path.push_back(r);
              record(n.children[r], redo, path, weight);
              path.pop_back();
              rest.assign(after.begin() + static_cast<std::ptrdiff_t>(m), after.end());
              ++redos;
              advanced = true;
            }
          }
          if (!advanced) return;  // unreachable for accepted input
        }
      }
    }
  }

  const std::map<NodeId, XorTally>& xor_tallies() const { return xor_; }
  const std::map<NodeId, LoopTally>& loop_tallies() const { return loop_; }
  const Node& root() const { return root_; }

 private:
  struct Key {
    const Node* node;
    int part;
    Symbols seq;
    bool operator<(const Key& o) const {
      if (node != o.node) return node < o.node;
      if (part != o.part) return part < o.part;
      return seq < o.seq;
    }
  };

  void index(const Node& n) {
    NodeInfo info;
    if (n.kind == NodeKind::Activity) {
      auto [it, inserted] = symbols_.try_emplace(n.label, static_cast<int>(symbols_.size()));
      info.alphabet.insert(it->second);
    }
    for (const auto& c : n.children) {
      index(c);
      const auto& ci = info_.at(&c);
      info.alphabet.insert(ci.alphabet.begin(), ci.alphabet.end());
    }
    info.min_len = min_length(n);
    Node unbounded = strip_caps(n);
    info.max_len = max_length(unbounded);
    info_[&n] = std::move(info);
  }

  static Node strip_caps(const Node& n) {
    Node copy = n;
    std::vector<Node*> stack{&copy};
    while (!stack.empty()) {
      Node* x = stack.back();
      stack.pop_back();
      x->max_redo.reset();
      for (auto& c : x->children) stack.push_back(&c);
    }
    return copy;
  }

  bool sequence_from(const Node& n, std::size_t child, const Symbols& s) {
    if (child == n.children.size()) return s.empty();
    const Key key{&n, static_cast<int>(child), s};
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    bool result = false;
    for (std::size_t k = 0; k <= s.size() && !result; ++k) {
      Symbols head(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k));
      if (!accepts(n.children[child], head)) continue;
      Symbols tail(s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
      result = sequence_from(n, child + 1, tail);
    }
    memo_[key] = result;
    return result;
  }

  // Distributes the events over parallel branches. Activities owned by one
  // branch go there; shared ones are assigned by backtracking.
  std::optional<std::vector<Symbols>> project(const Node& n, const Symbols& s) {
    const std::size_t k = n.children.size();
    std::vector<std::vector<std::size_t>> owners(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        if (info_.at(&n.children[c]).alphabet.count(s[i])) owners[i].push_back(c);
      }
      if (owners[i].empty()) return std::nullopt;
    }
    std::vector<Symbols> parts(k);
    std::size_t budget = 100000;
    if (assign(n, s, owners, 0, parts, budget)) return parts;
    return std::nullopt;
  }

  bool assign(const Node& n, const Symbols& s, const std::vector<std::vector<std::size_t>>& owners,
              std::size_t i, std::vector<Symbols>& parts, std::size_t& budget) {
    if (budget == 0) return false;
    --budget;
    if (i == s.size()) {
      for (std::size_t c = 0; c < parts.size(); ++c) {
        if (!accepts(n.children[c], parts[c])) return false;
      }
      return true;
    }
    for (const std::size_t c : owners[i]) {
      parts[c].push_back(s[i]);
      if (assign(n, s, owners, i + 1, parts, budget)) return true;
      parts[c].pop_back();
    }
    return false;
  }

  // Can `s` (non-empty) be produced by redo (do redo)* do? Returns the first
  // redo child and its length. Empty do/redo iterations are skipped.
  std::optional<std::pair<std::size_t, std::size_t>> redo_step(const Node& n, const Symbols& s, bool progressed) {
    for (std::size_t r = 1; r < n.children.size(); ++r) {
      for (std::size_t m = 0; m <= s.size(); ++m) {
        if (!progressed && m == 0) continue;
        Symbols head(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m));
        if (!accepts(n.children[r], head)) continue;
        Symbols tail(s.begin() + static_cast<std::ptrdiff_t>(m), s.end());
        if (loop_from(n, tail)) return std::make_pair(r, m);
      }
    }
    return std::nullopt;
  }

  bool loop_from(const Node& n, const Symbols& s) {
    const Key key{&n, -2, s};
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    memo_[key] = false;  // breaks cycles through empty iterations
    bool result = false;
    for (std::size_t k = 0; k <= s.size() && !result; ++k) {
      Symbols body(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k));
      if (!accepts(n.children[0], body)) continue;
      Symbols after(s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
      result = after.empty() || redo_step(n, after, k > 0).has_value();
    }
    memo_[key] = result;
    return result;
  }

  const Node& root_;
  std::map<std::string, int> symbols_;
  std::map<const Node*, NodeInfo> info_;
  std::map<Key, bool> memo_;
  std::map<NodeId, XorTally> xor_;
  std::map<NodeId, LoopTally> loop_;
};

void collect_paths(const Node& n, NodeId& path, std::vector<NodeId>& xors, std::vector<NodeId>& loops) {
  if (n.kind == NodeKind::Xor) xors.push_back(path);
  if (n.kind == NodeKind::Loop) loops.push_back(path);
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    path.push_back(i);
    collect_paths(n.children[i], path, xors, loops);
    path.pop_back();
  }
}

Node& node_at(Node& root, const NodeId& id) {
  Node* cur = &root;
  for (const std::size_t i : id) cur = &cur->children[i];
  return *cur;
}

}  // namespace

Node discover_node(const std::vector<Variant>& vs) {
  SubLog log;
  for (const auto& v : vs) log[v.sequence] += v.count;
  return mine(log);
}

ProcessTree discover_tree(const EventLog& log) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "cannot discover a model from an empty log");
  return ProcessTree{discover_node(variants(log)), std::nullopt};
}

bool replays(const ProcessTree& tree, const ActivitySequence& sequence) {
  Replayer r(tree.root);
  const Symbols s = r.encode(sequence);
  if (std::find(s.begin(), s.end(), -1) != s.end()) return false;
  return r.accepts(tree.root, s);
}

AnnotationReport annotate_with_report(const ProcessTree& tree, const EventLog& log) {
  require_valid(tree);
  AnnotationReport report;
  Replayer replayer(tree.root);
  std::size_t longest = 0;
  for (const auto& v : variants(log)) {
    longest = std::max(longest, v.sequence.size());
    const Symbols s = replayer.encode(v.sequence);
    const bool known = std::find(s.begin(), s.end(), -1) == s.end();
    if (!known || !replayer.accepts(tree.root, s)) {
      report.skipped_traces += v.count;
      continue;
    }
    NodeId path;
    replayer.record(tree.root, s, path, v.count);
    report.replayed_traces += v.count;
  }
  if (report.replayed_traces == 0) {
    throw Error(ErrorCode::NoReplayableTraces, "no trace of the log fits the tree",
                std::to_string(report.skipped_traces) + " traces skipped");
  }

  report.tree = tree;
  std::vector<NodeId> xors, loops;
  NodeId path;
  collect_paths(tree.root, path, xors, loops);
  for (const auto& id : xors) {
    Node& n = node_at(report.tree.root, id);
    const auto it = replayer.xor_tallies().find(id);
    const std::size_t total =
        it == replayer.xor_tallies().end()
            ? 0
            : std::accumulate(it->second.counts.begin(), it->second.counts.end(), std::size_t{0});
    n.weights.assign(n.children.size(), 0.0);
    if (total == 0) {
      n.weights.assign(n.children.size(), 1.0 / static_cast<double>(n.children.size()));
      report.unobserved_xors.push_back(id);
      continue;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      n.weights[i] = static_cast<double>(it->second.counts[i]) / static_cast<double>(total);
    }
  }
  for (const auto& id : loops) {
    Node& n = node_at(report.tree.root, id);
    const auto it = replayer.loop_tallies().find(id);
    if (it == replayer.loop_tallies().end() || it->second.executions == 0) {
      if (!n.max_redo) n.max_redo = 1;
      if (!n.redo_probability) n.redo_probability = 0.5;
      report.unobserved_loops.push_back(id);
      continue;
    }
    const LoopTally& t = it->second;
    n.max_redo = static_cast<int>(t.max_redo);
    n.redo_probability = static_cast<double>(t.executions_with_redo) / static_cast<double>(t.executions);
  }
  report.tree.max_trace_length = longest;
  return report;
}

ProcessTree annotate(const ProcessTree& tree, const EventLog& log) { return annotate_with_report(tree, log).tree; }

}  // namespace ptsim
