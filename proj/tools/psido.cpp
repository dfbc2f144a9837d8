#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "psido/commands.hpp"
#include "psido/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"psido: semiclassical symbol calculus checks"};
  app.require_subcommand(1);

  std::string config, out = ".";
  std::uint64_t seed = 1;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "random seed");
    return sub;
  };
  auto* star = add("star-test", "randomized star-product identities and torus composition slopes");
  auto* egorov = add("egorov-scan", "Egorov residual scans for cat maps and kicked flows");
  auto* decomp = add("decompose", "decompose a symbol-algebra isomorphism into an FIO and corrections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = psido::load_config(config);
    if (star->parsed()) return psido::cmd_star_test(cfg, out, seed, std::cout);
    if (egorov->parsed()) return psido::cmd_egorov_scan(cfg, out, seed, std::cout);
    if (decomp->parsed()) return psido::cmd_decompose(cfg, out, seed, std::cout);
  } catch (const psido::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
