#include "commands.hpp"

#include "angiorecon/error.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <exception>
#include <functional>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("angiorecon");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ANGIORECON_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Two-view vessel reconstruction from silhouettes"};
  app.require_subcommand(1);
  std::function<void()> selected;
  try {
    selected = angiorecon::cli::register_commands(app);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  try {
    selected();
    return 0;
  } catch (const angiorecon::NumericalError& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  } catch (const angiorecon::ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}
