#include <exception>
#include <iostream>
#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "commands.hpp"
#include "dag/errors.hpp"

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training allocates and frees the same large buffers every sample; keep
  // them on the heap instead of round-tripping through mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Graph-cascade landmark detector: data generation, training, evaluation and export", "dag"};
  app.require_subcommand(1);
  dag::cli::register_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const dag::ConfigError& e) {
    std::cerr << "dag: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "dag: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
