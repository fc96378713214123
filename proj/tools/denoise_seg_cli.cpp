// Copyright (c) 2026, The denoise-seg Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// denoise-seg: synthetic data, label corruption, training, evaluation and
// reporting from the command line. Errors are reported on stderr as one line
//   error: <code>: <message>
// with a nonzero exit status.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "denoise_seg/denoise_seg.hpp"

namespace ds = denoise_seg;
namespace fs = std::filesystem;

namespace {

void run_synth(const std::string& out, int n, int hw, std::uint64_t seed, double cup_missing, int channels) {
  ds::SynthSpec spec;
  spec.num_images = n;
  spec.height = hw;
  spec.width = hw;
  spec.seed = seed;
  spec.cup_missing_prob = cup_missing;
  spec.channels = channels;
  ds::write_dataset(out, spec);
  std::cout << "wrote " << n << " samples to " << out << "\n";
}

void run_corrupt(const std::string& in, const std::string& out, const ds::JedSpec& spec, const std::string& external) {
  auto samples = ds::read_dataset(in, false);
  const int y = samples.front().labels.num_categories;
  std::vector<char> untouched(samples.size(), 0);
  ds::parallel_for(samples.size(), [&](std::size_t i) {
    if (!external.empty()) {
      samples[i].labels =
          ds::ingest_external_labels((fs::path(external) / ds::sample_file_name(i)).string(), y);
      ds::require_same_extent(samples[i].labels, samples[i].image, "external label");
      return;
    }
    auto r = ds::jed_corrupt(samples[i].labels, spec, i);
    untouched[i] = r.no_foreground;
    samples[i].labels = std::move(r.labels);
  });
  ds::write_dataset(out, samples);
  std::size_t changed = 0, total = 0, skipped = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    skipped += untouched[i];
    for (std::size_t p = 0; p < samples[i].labels.pixel_count(); ++p) {
      changed += samples[i].labels.entries[p] != samples[i].clean.entries[p];
    }
    total += samples[i].labels.pixel_count();
  }
  std::cout << "wrote " << samples.size() << " samples to " << out << "; " << changed << " of " << total
            << " pixels differ from clean";
  if (skipped) std::cout << "; warning: " << skipped << " samples had no foreground";
  std::cout << "\n";
}

void print_summary(const ds::SegmentationSummary& s) {
  std::cout << "category   iou(%)  dice(%)\n";
  for (std::size_t k = 0; k < s.iou.size(); ++k) {
    std::cout << "c" << k << "        " << ds::percent(s.iou[k]) << "   " << ds::percent(s.dice[k]) << "\n";
  }
  std::cout << "fg-avg     " << ds::percent(s.foreground_iou()) << "   " << ds::percent(s.foreground_dice()) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmentation with noisy labels: clean-label disentangling lab"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic fundus-like dataset");
  std::string synth_out;
  int synth_n = 200, synth_hw = 128, synth_channels = 3;
  std::uint64_t synth_seed = 0;
  double cup_missing = 0.1;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_n, "Number of images")->capture_default_str();
  synth->add_option("--hw", synth_hw, "Height and width in pixels")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--cup-missing", cup_missing, "Probability that a sample has no cup")->capture_default_str();
  synth->add_option("--channels", synth_channels, "Image channels (1 or 3)")->capture_default_str();

  auto* corrupt = app.add_subcommand("corrupt", "Corrupt given labels with JED noise or ingest external labels");
  std::string corrupt_in, corrupt_out, external;
  ds::JedSpec jed;
  corrupt->add_option("--in", corrupt_in, "Input dataset directory")->required();
  corrupt->add_option("--out", corrupt_out, "Output dataset directory")->required();
  corrupt->add_option("--seed", jed.seed, "Random seed")->capture_default_str();
  corrupt->add_option("--kernel-min", jed.kernel_min, "Smallest square kernel side")->capture_default_str();
  corrupt->add_option("--kernel-max", jed.kernel_max, "Largest square kernel side")->capture_default_str();
  corrupt->add_option("--iter-min", jed.iter_min, "Fewest repetitions of the drawn operation")->capture_default_str();
  corrupt->add_option("--iter-max", jed.iter_max, "Most repetitions of the drawn operation")->capture_default_str();
  corrupt->add_option("--external", external, "Directory of externally produced noisy label files (NNNN.png)");

  auto* train = app.add_subcommand("train", "Train a model");
  std::string config_path, ablation, data_override, out_override;
  std::vector<std::string> overrides;
  std::uint64_t train_seed = 0;
  bool quiet = false;
  train->add_option("--config", config_path, "Flat key = value config file")->required();
  train->add_option("--ablation", ablation, "BASELINE, CLD_ONLY, CBS_ONLY, CLD_CBS or NA_CLD");
  auto* seed_opt = train->add_option("--seed", train_seed, "Random seed");
  train->add_option("--data", data_override, "Override data_dir");
  train->add_option("--out", out_override, "Override out_dir");
  train->add_option("--set", overrides, "Extra key=value overrides");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against clean labels");
  std::string ckpt, eval_data, split = "val";
  eval->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--split", split, "train, val or all")->capture_default_str();

  auto* report = app.add_subcommand("report", "Summaries of datasets and runs");
  std::string runs_dir, report_data;
  bool histogram = false, use_clean = false, retention = true;
  double rho = 10.0;
  std::uint64_t report_seed = 0;
  report->add_option("--runs", runs_dir, "Directory containing run directories");
  report->add_flag("--histogram", histogram, "Category distribution before/after class-balanced sampling");
  report->add_option("--data", report_data, "Dataset directory for --histogram");
  report->add_option("--rho", rho, "Balancing factor for --histogram")->capture_default_str();
  report->add_option("--seed", report_seed, "Sampling seed for --histogram")->capture_default_str();
  report->add_flag("--clean", use_clean, "Use clean instead of given labels for --histogram");
  report->add_flag("!--no-retention", retention, "Skip checkpoint-based retention tables for --runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*synth) {
      run_synth(synth_out, synth_n, synth_hw, synth_seed, cup_missing, synth_channels);
    } else if (*corrupt) {
      run_corrupt(corrupt_in, corrupt_out, jed, external);
    } else if (*train) {
      auto kv = ds::read_key_values(config_path);
      if (!ablation.empty()) kv["ablation"] = ablation;
      if (*seed_opt) kv["seed"] = std::to_string(train_seed);
      if (!data_override.empty()) kv["data_dir"] = data_override;
      if (!out_override.empty()) kv["out_dir"] = out_override;
      for (const auto& o : overrides) {
        const auto eq = o.find('=');
        ds::require(eq != std::string::npos, "invalid_argument", "--set expects key=value, got '" + o + "'");
        kv[o.substr(0, eq)] = o.substr(eq + 1);
      }
      const auto cfg = ds::TrainConfig::from_key_values(kv);
      const auto result = ds::train(cfg, quiet ? nullptr : &std::cout);
      print_summary(result.final_eval);
    } else if (*eval) {
      print_summary(ds::evaluate(ckpt, eval_data, split));
    } else if (*report) {
      ds::require(histogram || !runs_dir.empty(), "invalid_argument", "report needs --runs DIR or --histogram");
      if (histogram) {
        ds::require(!report_data.empty(), "invalid_argument", "--histogram needs --data DIR");
        ds::CbsConfig cbs;
        cbs.rho = rho;
        cbs.seed = report_seed;
        ds::print_histogram_report(std::cout, ds::histogram_report(ds::read_dataset(report_data, false), cbs, use_clean));
      }
      if (!runs_dir.empty()) {
        const auto runs = ds::load_runs(runs_dir);
        ds::print_ablation_table(std::cout, runs);
        if (retention) {
          for (const auto& r : runs) {
            std::cout << "\n" << r.dir << " (" << r.ablation << ", seed " << r.seed << ")\n";
            ds::print_retention(std::cout, ds::run_retention(r.dir));
          }
        }
      }
    }
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
