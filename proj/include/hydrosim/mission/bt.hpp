#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hydrosim::mission {

enum class Status { Running, Success, Failure };

constexpr const char* status_name(Status s) {
  switch (s) {
    case Status::Running: return "Running";
    case Status::Success: return "Success";
    case Status::Failure: return "Failure";
  }
  return "?";
}

enum class NodeKind { Sequence, Fallback, Action, Condition };

/// Behavior-tree node. Composites keep the index of their running child
/// between ticks (reactive re-evaluation of earlier children is not done).
struct Node {
  NodeKind kind = NodeKind::Action;
  std::string name;
  std::vector<Node> children;
  int binding = -1;   ///< leaf action id, interpreted by the leaf callback
  int waypoint = -1;  ///< owning waypoint, -1 for none
  std::size_t active = 0;
  std::optional<Status> last;

  bool leaf() const { return kind == NodeKind::Action || kind == NodeKind::Condition; }
};

inline Node sequence(std::string name, std::vector<Node> children) {
  return {NodeKind::Sequence, std::move(name), std::move(children)};
}
inline Node fallback(std::string name, std::vector<Node> children) {
  return {NodeKind::Fallback, std::move(name), std::move(children)};
}
inline Node action(std::string name, int binding, int waypoint = -1) {
  return {NodeKind::Action, std::move(name), {}, binding, waypoint};
}
inline Node condition(std::string name, int binding, int waypoint = -1) {
  return {NodeKind::Condition, std::move(name), {}, binding, waypoint};
}

using LeafFn = std::function<Status(const Node&)>;

/// Optional observer called whenever a node's returned status changes.
using TransitionFn = std::function<void(const Node&, Status)>;

inline Status tick(Node& n, const LeafFn& leaf, const TransitionFn& on_transition = {}) {
  Status s;
  switch (n.kind) {
    case NodeKind::Action:
      s = leaf(n);
      break;
    case NodeKind::Condition:
      s = leaf(n);
      if (s == Status::Running) s = Status::Failure;  // conditions answer immediately
      break;
    case NodeKind::Sequence:
    case NodeKind::Fallback: {
      const Status stop_on = n.kind == NodeKind::Sequence ? Status::Failure : Status::Success;
      s = n.kind == NodeKind::Sequence ? Status::Success : Status::Failure;
      for (std::size_t i = n.active; i < n.children.size(); ++i) {
        const Status c = tick(n.children[i], leaf, on_transition);
        if (c == Status::Running) {
          n.active = i;
          s = Status::Running;
          break;
        }
        if (c == stop_on) {
          s = stop_on;
          break;
        }
      }
      if (s != Status::Running) n.active = 0;
      break;
    }
  }
  if (on_transition && n.last != s) on_transition(n, s);
  n.last = s;
  return s;
}

/// Clears composite memory below n.
inline void reset(Node& n) {
  n.active = 0;
  n.last.reset();
  for (auto& c : n.children) reset(c);
}

inline std::size_t count_leaves(const Node& n) {
  if (n.leaf()) return 1;
  std::size_t k = 0;
  for (const auto& c : n.children) k += count_leaves(c);
  return k;
}

template <class F>
void for_each_leaf(const Node& n, F&& f) {
  if (n.leaf()) {
    f(n);
    return;
  }
  for (const auto& c : n.children) for_each_leaf(c, f);
}

}  // namespace hydrosim::mission
