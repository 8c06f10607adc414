#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "common.hpp"
#include "odp/error.hpp"
#include "odp/manifest.hpp"

namespace odptool {
void register_spectra(CLI::App& app);
void register_synth(CLI::App& app);
void register_train(CLI::App& app);
void register_eval(CLI::App& app);
void register_disentangle(CLI::App& app);
void register_verify(CLI::App& app);
}  // namespace odptool

int main(int argc, char** argv) {
  CLI::App app{
      "odp - spectral artifact additivity analysis and orthogonal "
      "decomposition/purification training on synthetic corpora"};
  app.set_version_flag("--version", odp::kToolVersion);
  app.require_subcommand(1);

  odptool::register_spectra(app);
  odptool::register_synth(app);
  odptool::register_train(app);
  odptool::register_eval(app);
  odptool::register_disentangle(app);
  odptool::register_verify(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? odptool::kExitOk : odptool::kExitUsage;
  } catch (const odp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return odptool::kExitUsage;
  } catch (const odp::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return odptool::kExitDataFormat;
  } catch (const odp::DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return odptool::kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return odptool::kExitOk;
}
