#pragma once

#include "common.hpp"

#include <functional>
#include <memory>

namespace CLI {
class App;
}

namespace forge::cli {

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::function<void(Context&)> run;
};

void add_commands(CLI::App& root, std::vector<Command>& commands);

}  // namespace forge::cli
