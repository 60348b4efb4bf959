#include <iostream>

#include "CLI11.hpp"
#include "cfaudit/common/error.hpp"
#include "cfaudit/model/external_adapter.hpp"
#include "cfaudit/model/serialization.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Serve a saved model over the line-JSON adapter protocol"};
  std::string model_path;
  app.add_option("--model", model_path, "Saved model (JSON)")->required()->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto handle = cfaudit::model::load_model(model_path);
    return cfaudit::model::serve_adapter(handle, std::cin, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
