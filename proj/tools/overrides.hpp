#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>
#include <CLI11.hpp>

#include "dag/config.hpp"

namespace dag::cli {

/// Flags bound to a scratch RunConfig that holds the defaults. After parsing,
/// only the flags that were given are copied onto the resolved config, so a
/// config file fills in whatever the command line leaves out.
class ConfigFlags {
 public:
  void add_config_file(CLI::App& app);
  void add_data_flags(CLI::App& app);
  void add_model_flags(CLI::App& app);
  void add_train_flags(CLI::App& app);
  void add_path_flags(CLI::App& app, bool data, bool out);

  /// Defaults, then the --config file, then explicit flags.
  RunConfig resolve() const;

 private:
  template <class Get>
  void add(CLI::App& app, const std::string& name, Get get, const std::string& help);
  void add_choice(CLI::App& app, const std::string& name, std::string& slot, std::vector<std::string> choices,
                  std::function<void(RunConfig&, const std::string&)> apply, const std::string& help);

  RunConfig flags_;
  std::string config_path_;
  std::string connectivity_ = "learned";
  std::string transform_ = "perspective";
  std::size_t image_size_ = 128;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> apply_;
};

}  // namespace dag::cli
