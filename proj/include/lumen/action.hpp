#pragma once

#include <array>
#include <string>

namespace lumen {

// The three robot commands. The declaration order is also the argmax
// tie-break order used by the greedy policy.
enum class Action : int { BendCw = 0, BendCcw = 1, Advance = 2 };

inline constexpr std::array<Action, 3> kAllActions = {Action::BendCw, Action::BendCcw,
                                                      Action::Advance};
inline constexpr int kActionCount = 3;

std::string action_name(Action a);
Action action_from_name(const std::string& name);

}  // namespace lumen
