// Minimal end-to-end example: generate a stream with one mean shift, feed it
// through a detector, and print what comes back.

#include <iostream>

#include "abcd/bench.hpp"
#include "abcd/detector.hpp"
#include "abcd/generators.hpp"

int main() {
  const auto stream = abcd::gen_normal(/*d=*/24, /*d_star=*/8, abcd::NormalChangeKind::mean,
                                       /*shift_sizes=*/{0.3}, /*len_per_concept=*/2000,
                                       abcd::DriftSchedule{}, /*seed=*/42);

  abcd::DetectorConfig config;
  config.model.kind = abcd::ModelKind::pca;
  config.model.eta = 0.5;

  abcd::AbcdDetector detector(config);
  for (const auto& x : stream.observations) {
    if (auto report = detector.process(x)) {
      std::cout << "change detected at t=" << report->t_detected
                << " (estimated change point t*=" << report->t_star << ", p=" << report->p
                << ", severity=" << report->severity << ")\n";
      std::cout << "affected dimensions:";
      for (int j : report->subspace) std::cout << " " << j;
      std::cout << "\n";
    }
  }
  std::cout << "true change at t=" << stream.changes[0].index << "\n";
  return 0;
}
