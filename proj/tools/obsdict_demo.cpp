// Writes the bundled desk-scale benchmark: procedural font renders, the
// pseudo-ancient query set and the exemplar/validation trees used by refine.

#include <CLI11.hpp>
#include <iostream>

#include "obsdict/demo.hpp"
#include "obsdict/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the demo benchmark tree"};
  std::string ids = OBSDICT_DEFAULT_IDS;
  std::string out;
  obsdict::demo::BenchmarkLayout layout;
  unsigned threads = 0;
  app.add_option("--ids", ids, "IDS table")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--per-label", layout.per_label, "pseudo-ancient exemplars per label")->check(CLI::Range(1, 1000));
  app.add_option("--seed", layout.query_seed, "query seed");
  app.add_option("--split-seed", layout.split_seed, "character split seed");
  app.add_option("--ratio", layout.ratio, "train share of the character split")->check(CLI::Range(0.01, 0.99));
  app.add_option("--validation-ratio", layout.validation_ratio, "share of train labels held out for validation")
      ->check(CLI::Range(0.01, 0.99));
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    const auto s = obsdict::demo::write_benchmark(ids, out, layout, threads);
    std::cout << "labels\t" << s.labels << "\nqueries\t" << s.queries << "\ntest_labels\t" << s.test_labels
              << "\nexemplar_labels\t" << s.exemplar_labels << "\nvalidation_labels\t" << s.validation_labels << "\n";
  } catch (const obsdict::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
