#include "ptsim/ptree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

namespace ptsim {
namespace {

constexpr double kWeightTolerance = 1e-9;

const char* operator_symbol(NodeKind k) {
  switch (k) {
    case NodeKind::Sequence: return "->";
    case NodeKind::Xor: return "X";
    case NodeKind::Parallel: return "+";
    case NodeKind::Loop: return "*";
    default: return "";
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool is_bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

bool is_bare_name(std::string_view s) {
  if (s.empty() || s == "tau") return false;
  if (!std::isalnum(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_bare_char(s[i])) return false;
    if (s[i] == '-' && i + 1 < s.size() && s[i + 1] == '>') return false;
  }
  return true;
}

std::string quote_name(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void validate_node(const Node& n, NodeId& path, std::vector<Violation>& out) {
  auto add = [&](ErrorCode code, std::string msg) { out.push_back(Violation{code, path, std::move(msg)}); };
  switch (n.kind) {
    case NodeKind::Activity:
      if (n.label.empty()) add(ErrorCode::InvariantViolation, "activity leaf without a name");
      [[fallthrough]];
    case NodeKind::Tau:
      if (!n.children.empty()) add(ErrorCode::ArityError, "leaf with children");
      break;
    case NodeKind::Sequence:
    case NodeKind::Parallel:
      if (n.children.empty()) add(ErrorCode::ArityError, std::string(to_string(n.kind)) + " needs at least 1 child");
      break;
    case NodeKind::Xor:
      if (n.children.size() < 2) add(ErrorCode::ArityError, "xor needs at least 2 children");
      if (!n.weights.empty()) {
        if (n.weights.size() != n.children.size()) {
          add(ErrorCode::WeightError, "xor weight count differs from child count");
        } else {
          bool finite = true;
          for (const double w : n.weights) finite = finite && std::isfinite(w) && w >= 0.0;
          const double sum = std::accumulate(n.weights.begin(), n.weights.end(), 0.0);
          if (!finite) {
            add(ErrorCode::WeightError, "xor weights must be finite and non-negative");
          } else if (std::abs(sum - 1.0) > kWeightTolerance) {
            add(ErrorCode::WeightError, "xor weights sum to " + format_double(sum) + ", expected 1");
          }
        }
      }
      break;
    case NodeKind::Loop:
      if (n.children.size() < 2) add(ErrorCode::ArityError, "loop needs a do child and at least 1 redo child");
      if (n.max_redo && *n.max_redo < 0) add(ErrorCode::InvariantViolation, "max_redo must be non-negative");
      if (n.redo_probability &&
          !(std::isfinite(*n.redo_probability) && *n.redo_probability >= 0.0 && *n.redo_probability <= 1.0)) {
        add(ErrorCode::InvariantViolation, "p_redo must lie in [0, 1]");
      }
      break;
  }
  if (n.kind != NodeKind::Xor && !n.weights.empty()) add(ErrorCode::WeightError, "weights outside an xor");
  if (n.kind != NodeKind::Loop && (n.max_redo || n.redo_probability)) {
    add(ErrorCode::InvariantViolation, "loop annotation on a non-loop node");
  }
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    path.push_back(i);
    validate_node(n.children[i], path, out);
    path.pop_back();
  }
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  ProcessTree parse() {
    ProcessTree tree;
    tree.root = parse_node(0, &tree);
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::SyntaxError, msg + " at position " + std::to_string(pos_),
                "position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool operator_follows(std::size_t after) {
    std::size_t p = after;
    while (p < s_.size() && std::isspace(static_cast<unsigned char>(s_[p]))) ++p;
    return p < s_.size() && s_[p] == '(';
  }

  Node parse_node(int depth, ProcessTree* tree) {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    std::optional<NodeKind> kind;
    if (s_.compare(pos_, 2, "->") == 0) {
      kind = NodeKind::Sequence;
      pos_ += 2;
    } else if (s_[pos_] == '+') {
      kind = NodeKind::Parallel;
      ++pos_;
    } else if (s_[pos_] == '*') {
      kind = NodeKind::Loop;
      ++pos_;
    } else if (s_[pos_] == 'X' && operator_follows(pos_ + 1)) {
      kind = NodeKind::Xor;
      ++pos_;
    }

    Node node;
    if (kind) {
      node.kind = *kind;
      expect('(');
      bool any_weight = false;
      bool all_weights = true;
      std::vector<double> weights;
      do {
        node.children.push_back(parse_node(depth + 1, nullptr));
        if (peek(':')) {
          if (*kind != NodeKind::Xor) fail("weights are only allowed directly under X");
          ++pos_;
          weights.push_back(parse_float());
          any_weight = true;
        } else {
          all_weights = false;
        }
      } while (peek(',') && (++pos_, true));
      expect(')');
      if (any_weight && !all_weights) {
        throw Error(ErrorCode::WeightError, "either every xor child carries a weight or none does",
                    "position " + std::to_string(pos_));
      }
      node.weights = std::move(weights);
    } else if (s_[pos_] == '"') {
      node = Node::activity(parse_quoted());
    } else {
      const std::size_t begin = pos_;
      while (pos_ < s_.size() && is_bare_char(s_[pos_]) && s_.compare(pos_, 2, "->") != 0) ++pos_;
      if (pos_ == begin) fail("expected a node");
      const std::string_view name = s_.substr(begin, pos_ - begin);
      node = name == "tau" ? Node::tau() : Node::activity(std::string(name));
    }

    if (peek('{')) parse_annotation(node, depth == 0 ? tree : nullptr);
    return node;
  }

  void parse_annotation(Node& node, ProcessTree* root_tree) {
    expect('{');
    do {
      skip_ws();
      const std::size_t begin = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string key(s_.substr(begin, pos_ - begin));
      expect('=');
      if (key == "max_redo") {
        if (node.kind != NodeKind::Loop) fail("max_redo is only valid on a loop");
        node.max_redo = static_cast<int>(parse_int());
      } else if (key == "p_redo") {
        if (node.kind != NodeKind::Loop) fail("p_redo is only valid on a loop");
        node.redo_probability = parse_float();
      } else if (key == "max_trace_length") {
        if (root_tree == nullptr) fail("max_trace_length is only valid on the root");
        const long long v = parse_int();
        if (v < 1) fail("max_trace_length must be positive");
        root_tree->max_trace_length = static_cast<std::size_t>(v);
      } else {
        fail("unknown annotation '" + key + "'");
      }
    } while (peek(',') && (++pos_, true));
    expect('}');
  }

  std::string parse_quoted() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out.push_back(s_[pos_++]);
    }
    if (pos_ >= s_.size()) fail("unterminated quoted name");
    ++pos_;
    if (out.empty()) fail("empty activity name");
    return out;
  }

  double parse_float() {
    skip_ws();
    double v = 0;
    const auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (res.ec != std::errc{}) fail("expected a number");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }

  long long parse_int() {
    skip_ws();
    long long v = 0;
    const auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (res.ec != std::errc{}) fail("expected an integer");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void render_into(const Node& n, std::string& out, const ProcessTree* root_of) {
  switch (n.kind) {
    case NodeKind::Activity:
      out += is_bare_name(n.label) ? n.label : quote_name(n.label);
      break;
    case NodeKind::Tau:
      out += "tau";
      break;
    default:
      out += operator_symbol(n.kind);
      out += '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ", ";
        render_into(n.children[i], out, nullptr);
        if (!n.weights.empty()) out += ":" + format_double(n.weights[i]);
      }
      out += ')';
      break;
  }
  std::vector<std::string> annot;
  if (n.max_redo) annot.push_back("max_redo=" + std::to_string(*n.max_redo));
  if (n.redo_probability) annot.push_back("p_redo=" + format_double(*n.redo_probability));
  if (root_of && root_of->max_trace_length) {
    annot.push_back("max_trace_length=" + std::to_string(*root_of->max_trace_length));
  }
  if (!annot.empty()) {
    out += '{';
    for (std::size_t i = 0; i < annot.size(); ++i) {
      if (i) out += ", ";
      out += annot[i];
    }
    out += '}';
  }
}

// ---------------------------------------------------------------------------
// Language enumeration

using Language = std::set<ActivitySequence>;

void guard(const Language& l) {
  if (l.size() > kMaxEnumerationSize) {
    throw Error(ErrorCode::Explosion, "language exceeds " + std::to_string(kMaxEnumerationSize) + " sequences");
  }
}

Language concat(const Language& a, const Language& b, std::size_t max_len) {
  Language out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x.size() + y.size() > max_len) continue;
      ActivitySequence s = x;
      s.insert(s.end(), y.begin(), y.end());
      out.insert(std::move(s));
    }
    guard(out);
  }
  return out;
}

void interleave(const ActivitySequence& x, std::size_t i, const ActivitySequence& y, std::size_t j,
                ActivitySequence& cur, Language& out) {
  if (i == x.size() && j == y.size()) {
    out.insert(cur);
    return;
  }
  if (i < x.size()) {
    cur.push_back(x[i]);
    interleave(x, i + 1, y, j, cur, out);
    cur.pop_back();
  }
  if (j < y.size()) {
    cur.push_back(y[j]);
    interleave(x, i, y, j + 1, cur, out);
    cur.pop_back();
  }
}

Language shuffle(const Language& a, const Language& b, std::size_t max_len) {
  Language out;
  ActivitySequence cur;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x.size() + y.size() > max_len) continue;
      interleave(x, 0, y, 0, cur, out);
    }
    guard(out);
  }
  return out;
}

Language language(const Node& n, std::size_t max_len) {
  switch (n.kind) {
    case NodeKind::Activity:
      return max_len >= 1 ? Language{{n.label}} : Language{};
    case NodeKind::Tau:
      return Language{{}};
    case NodeKind::Sequence: {
      Language acc{{}};
      for (const auto& c : n.children) acc = concat(acc, language(c, max_len), max_len);
      return acc;
    }
    case NodeKind::Parallel: {
      Language acc{{}};
      for (const auto& c : n.children) acc = shuffle(acc, language(c, max_len), max_len);
      return acc;
    }
    case NodeKind::Xor: {
      Language acc;
      for (const auto& c : n.children) {
        acc.merge(language(c, max_len));
        guard(acc);
      }
      return acc;
    }
    case NodeKind::Loop: {
      const Language body = language(n.children.front(), max_len);
      Language redo;
      for (std::size_t i = 1; i < n.children.size(); ++i) redo.merge(language(n.children[i], max_len));
      const Language step = concat(redo, body, max_len);
      Language result = body;
      Language frontier = body;
      for (int k = 0; !frontier.empty(); ++k) {
        if (n.max_redo && k >= *n.max_redo) break;
        Language next;
        for (auto& s : concat(frontier, step, max_len)) {
          if (!result.count(s)) next.insert(s);
        }
        result.insert(next.begin(), next.end());
        guard(result);
        frontier = std::move(next);
      }
      return result;
    }
  }
  return {};
}

Node* find_mut(Node& root, const NodeId& id) {
  Node* cur = &root;
  for (const std::size_t i : id) {
    if (i >= cur->children.size()) return nullptr;
    cur = &cur->children[i];
  }
  return cur;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Activity: return "activity";
    case NodeKind::Tau: return "tau";
    case NodeKind::Sequence: return "sequence";
    case NodeKind::Xor: return "xor";
    case NodeKind::Parallel: return "parallel";
    case NodeKind::Loop: return "loop";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  for (const NodeKind k : {NodeKind::Activity, NodeKind::Tau, NodeKind::Sequence, NodeKind::Xor,
                           NodeKind::Parallel, NodeKind::Loop}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

Node Node::activity(std::string name) {
  Node n;
  n.kind = NodeKind::Activity;
  n.label = std::move(name);
  return n;
}

Node Node::tau() { return Node{}; }

Node Node::op(NodeKind kind, std::vector<Node> children) {
  Node n;
  n.kind = kind;
  n.children = std::move(children);
  return n;
}

std::string to_string(const NodeId& id) {
  std::string out = "[";
  for (std::size_t i = 0; i < id.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(id[i]);
  }
  return out + "]";
}

const Node* find_node(const Node& root, const NodeId& id) {
  const Node* cur = &root;
  for (const std::size_t i : id) {
    if (i >= cur->children.size()) return nullptr;
    cur = &cur->children[i];
  }
  return cur;
}

std::vector<Violation> validate(const ProcessTree& tree) {
  std::vector<Violation> out;
  NodeId path;
  validate_node(tree.root, path, out);
  if (tree.max_trace_length && *tree.max_trace_length == 0) {
    out.push_back(Violation{ErrorCode::InvariantViolation, {}, "max_trace_length must be positive"});
  }
  return out;
}

void require_valid(const ProcessTree& tree) {
  const auto violations = validate(tree);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw Error(v.code, v.message, "node " + to_string(v.node));
  }
}

ProcessTree parse_tree(std::string_view text) {
  ProcessTree tree = Parser(text).parse();
  require_valid(tree);
  return tree;
}

std::string render_node(const Node& node) {
  std::string out;
  render_into(node, out, nullptr);
  return out;
}

std::string render_tree(const ProcessTree& tree) {
  std::string out;
  render_into(tree.root, out, &tree);
  return out;
}

ProcessTree apply_edit(const ProcessTree& tree, const TreeEdit& e) {
  ProcessTree out = tree;
  auto target = [&](const NodeId& id) -> Node& {
    Node* n = find_mut(out.root, id);
    if (!n) throw Error(ErrorCode::BadNodeId, "node does not exist", to_string(id));
    return *n;
  };
  auto reject = [](const std::string& msg, const NodeId& id) {
    throw Error(ErrorCode::InvariantViolation, msg, to_string(id));
  };

  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        Node& n = target(op.node);
        if constexpr (std::is_same_v<T, edit::ChangeOperator>) {
          if (!is_operator(n.kind)) reject("only operator nodes can change operator", op.node);
          if (!is_operator(op.kind)) reject("target kind must be an operator", op.node);
          if (n.kind != op.kind) {
            n.kind = op.kind;
            n.weights.clear();
            if (op.kind != NodeKind::Loop) {
              n.max_redo.reset();
              n.redo_probability.reset();
            }
          }
        } else if constexpr (std::is_same_v<T, edit::InsertChild>) {
          if (!is_operator(n.kind)) reject("cannot insert below a leaf", op.node);
          if (op.position > n.children.size()) {
            throw Error(ErrorCode::BadNodeId, "insert position out of range", to_string(op.node));
          }
          n.children.insert(n.children.begin() + static_cast<std::ptrdiff_t>(op.position), op.subtree);
          n.weights.clear();
        } else if constexpr (std::is_same_v<T, edit::DeleteChild>) {
          if (op.position >= n.children.size()) {
            throw Error(ErrorCode::BadNodeId, "child position out of range", to_string(op.node));
          }
          n.children.erase(n.children.begin() + static_cast<std::ptrdiff_t>(op.position));
          n.weights.clear();
          if ((n.kind == NodeKind::Sequence || n.kind == NodeKind::Parallel) && n.children.size() == 1) {
            Node only = std::move(n.children.front());
            n = std::move(only);
          }
        } else if constexpr (std::is_same_v<T, edit::SetXorWeights>) {
          if (n.kind != NodeKind::Xor) reject("weights can only be set on an xor", op.node);
          n.weights = op.weights;
        } else if constexpr (std::is_same_v<T, edit::SetMaxRedo>) {
          if (n.kind != NodeKind::Loop) reject("max_redo can only be set on a loop", op.node);
          n.max_redo = op.max_redo;
        } else if constexpr (std::is_same_v<T, edit::ReplaceSubtree>) {
          n = op.subtree;
        } else if constexpr (std::is_same_v<T, edit::SwapChildren>) {
          if (op.first >= n.children.size() || op.second >= n.children.size()) {
            throw Error(ErrorCode::BadNodeId, "child position out of range", to_string(op.node));
          }
          std::swap(n.children[op.first], n.children[op.second]);
          if (!n.weights.empty()) std::swap(n.weights[op.first], n.weights[op.second]);
        }
      },
      e);

  const auto violations = validate(out);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw Error(ErrorCode::InvariantViolation, v.message, "node " + to_string(v.node));
  }
  return out;
}

std::set<ActivitySequence> enumerate_language(const ProcessTree& tree, std::size_t max_len) {
  if (max_len > kMaxEnumerationLength) {
    throw Error(ErrorCode::InvalidArgument,
                "enumeration is limited to length " + std::to_string(kMaxEnumerationLength));
  }
  return language(tree.root, max_len);
}

std::size_t min_length(const Node& n) {
  switch (n.kind) {
    case NodeKind::Activity: return 1;
    case NodeKind::Tau: return 0;
    case NodeKind::Xor: {
      std::size_t best = SIZE_MAX;
      for (const auto& c : n.children) best = std::min(best, min_length(c));
      return n.children.empty() ? 0 : best;
    }
    case NodeKind::Loop: return n.children.empty() ? 0 : min_length(n.children.front());
    default: {
      std::size_t sum = 0;
      for (const auto& c : n.children) sum += min_length(c);
      return sum;
    }
  }
}

std::optional<std::size_t> max_length(const Node& n) {
  switch (n.kind) {
    case NodeKind::Activity: return 1;
    case NodeKind::Tau: return 0;
    case NodeKind::Xor: {
      std::size_t best = 0;
      for (const auto& c : n.children) {
        const auto m = max_length(c);
        if (!m) return std::nullopt;
        best = std::max(best, *m);
      }
      return best;
    }
    case NodeKind::Loop: {
      if (n.children.empty()) return 0;
      const auto body = max_length(n.children.front());
      if (!body) return std::nullopt;
      std::size_t redo = 0;
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        const auto m = max_length(n.children[i]);
        if (!m) return std::nullopt;
        redo = std::max(redo, *m);
      }
      if (n.max_redo) return *body + static_cast<std::size_t>(*n.max_redo) * (redo + *body);
      if (redo + *body == 0) return *body;
      return std::nullopt;
    }
    default: {
      std::size_t sum = 0;
      for (const auto& c : n.children) {
        const auto m = max_length(c);
        if (!m) return std::nullopt;
        sum += *m;
      }
      return sum;
    }
  }
}

std::set<std::string> leaf_activities(const Node& node) {
  std::set<std::string> out;
  if (node.kind == NodeKind::Activity) out.insert(node.label);
  for (const auto& c : node.children) out.merge(leaf_activities(c));
  return out;
}

std::size_t node_count(const Node& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += node_count(c);
  return n;
}

}  // namespace ptsim
