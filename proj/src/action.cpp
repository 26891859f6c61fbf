#include "lumen/action.hpp"

#include "lumen/errors.hpp"

namespace lumen {

std::string action_name(Action a) {
  switch (a) {
    case Action::BendCw:
      return "bend_cw";
    case Action::BendCcw:
      return "bend_ccw";
    case Action::Advance:
      return "advance";
  }
  return "advance";
}

Action action_from_name(const std::string& name) {
  if (name == "bend_cw") return Action::BendCw;
  if (name == "bend_ccw") return Action::BendCcw;
  if (name == "advance") return Action::Advance;
  throw SchemaError("unknown action name: " + name);
}

}  // namespace lumen
