// Scripted adapter for protocol tests. Scores rows by their first column.
#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "json.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ok";
  std::string line;
  while (std::getline(std::cin, line)) {
    auto msg = nlohmann::json::parse(line);
    const auto op = msg.value("op", std::string());
    if (op == "hello") {
      if (mode == "refuse") {
        std::cout << R"({"ok":false,"error":"nope"})" << std::endl;
        return 0;
      }
      std::cout << R"({"ok":true})" << std::endl;
      if (mode == "crash") return 9;
      continue;
    }
    if (op == "bye") return 0;
    if (mode == "malformed") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    if (mode == "slow") std::this_thread::sleep_for(std::chrono::seconds(5));
    nlohmann::json labels = nlohmann::json::array(), probas = nlohmann::json::array();
    for (const auto& row : msg.at("rows")) {
      const double x = row.at(0).get<double>();
      double p = x > 0 ? 0.75 : 0.25;
      if (mode == "badproba" && probas.empty()) p = 1.5;
      labels.push_back(p >= 0.5 ? 1 : 0);
      probas.push_back(p);
    }
    if (mode == "short") labels.erase(labels.size() - 1);
    std::cout << nlohmann::json{{"labels", labels}, {"probas", probas}}.dump() << std::endl;
  }
  return 0;
}
