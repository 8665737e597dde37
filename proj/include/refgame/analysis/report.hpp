// Copyright 2026 The refgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/analysis/episode_log.hpp"
#include "refgame/analysis/stats.hpp"
#include "refgame/core/binary_io.hpp"
#include "refgame/core/error.hpp"

namespace refgame::analysis {

// Full-corpus values quoted for comparison in every summary; the synthetic
// runs in this repository are not expected to reach them.
inline nlohmann::json reference_values() {
  return {
      {"length_difficulty_pearson_r", -0.81},
      {"length_difficulty_pearson_p", 4e-15},
      {"stability_acc_at_6_mean_percent", 96.6},
      {"stability_acc_at_6_variance", 1.98e-1},
      {"stability_acc_at_1_mean_percent", 86.0},
      {"stability_acc_at_1_variance", 7.59e-1},
      {"stability_loss_mean", 0.611},
      {"stability_loss_variance", 2.72e-3},
      {"bandwidth_d32_out_of_domain_acc_at_7_percent", 45.0},
  };
}

// Fraction of episodes whose true class ranks within the top K.
inline double accuracy_at_k(const std::vector<EpisodeLog>& logs, int k) {
  if (k < 1) throw UsageError("K must be >= 1");
  if (logs.empty()) throw UndefinedStatisticError("accuracy over zero episodes");
  double hits = 0.0;
  for (const auto& l : logs) {
    if (k > l.num_candidates) {
      throw UsageError("K = " + std::to_string(k) + " exceeds |O_R| = " + std::to_string(l.num_candidates));
    }
    if (l.rank <= k) hits += 1.0;
  }
  return hits / static_cast<double>(logs.size());
}

// ---- length bins ----

struct LengthBin {
  int length = 0;
  int count = 0;
  int correct = 0;
  double accuracy() const { return count > 0 ? static_cast<double>(correct) / count : 0.0; }
};

// One bin per length 1..max_steps; empty bins are kept.
inline std::vector<LengthBin> length_bins(const std::vector<EpisodeLog>& logs, int max_steps) {
  if (max_steps < 1) throw UsageError("T_max must be >= 1");
  std::vector<LengthBin> bins(static_cast<std::size_t>(max_steps));
  for (int t = 0; t < max_steps; ++t) bins[static_cast<std::size_t>(t)].length = t + 1;
  for (const auto& l : logs) {
    if (l.length < 1 || l.length > max_steps) {
      throw DataError("episode length " + std::to_string(l.length) + " outside [1, " +
                      std::to_string(max_steps) + "]");
    }
    auto& b = bins[static_cast<std::size_t>(l.length - 1)];
    ++b.count;
    b.correct += l.correct ? 1 : 0;
  }
  return bins;
}

// ---- entropy curves ----

struct CurvePoint {
  int step = 0;
  int count = 0;
  double value = 0.0;
};

struct EntropyCurves {
  // Prediction entropy per step, one curve per final length.
  std::map<int, std::vector<CurvePoint>> prediction_by_length;
  // Means over every episode still running at step t.
  std::vector<CurvePoint> prediction;
  std::vector<CurvePoint> sender;
  std::vector<CurvePoint> receiver;  // excludes terminal steps
};

namespace detail {

inline std::vector<CurvePoint> finish(const std::vector<double>& sum, const std::vector<int>& count) {
  std::vector<CurvePoint> out;
  for (std::size_t t = 0; t < sum.size(); ++t) {
    if (count[t] == 0) continue;
    out.push_back({static_cast<int>(t) + 1, count[t], sum[t] / count[t]});
  }
  return out;
}

}  // namespace detail

inline EntropyCurves entropy_curves(const std::vector<EpisodeLog>& logs) {
  int max_len = 0;
  for (const auto& l : logs) max_len = std::max(max_len, l.length);
  const auto n = static_cast<std::size_t>(max_len);
  std::vector<double> pred(n), snd(n), rcv(n);
  std::vector<int> pred_n(n), rcv_n(n);
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> by_len;
  for (const auto& l : logs) {
    auto& [bsum, bcount] = by_len[l.length];
    bsum.resize(static_cast<std::size_t>(l.length));
    bcount.resize(static_cast<std::size_t>(l.length));
    for (int t = 0; t < l.length; ++t) {
      const auto i = static_cast<std::size_t>(t);
      pred[i] += l.prediction_entropy[i];
      snd[i] += l.sender_entropy[i];
      ++pred_n[i];
      bsum[i] += l.prediction_entropy[i];
      ++bcount[i];
      if (t + 1 < l.length) {
        rcv[i] += l.receiver_entropy[i];
        ++rcv_n[i];
      }
    }
  }
  EntropyCurves c;
  c.prediction = detail::finish(pred, pred_n);
  c.sender = detail::finish(snd, pred_n);
  c.receiver = detail::finish(rcv, rcv_n);
  for (const auto& [len, sc] : by_len) c.prediction_by_length[len] = detail::finish(sc.first, sc.second);
  return c;
}

// ---- per-class lengths and difficulty ----

struct ClassLength {
  int class_id = 0;
  std::string class_name;
  int episodes = 0;
  double mean_length = 0.0;
  double accuracy = 0.0;
  std::optional<double> difficulty;
};

inline std::vector<ClassLength> class_lengths(const std::vector<EpisodeLog>& logs) {
  std::map<int, ClassLength> by_class;
  for (const auto& l : logs) {
    auto& c = by_class[l.class_id];
    c.class_id = l.class_id;
    if (c.class_name.empty()) c.class_name = l.class_name;
    ++c.episodes;
    c.mean_length += l.length;
    c.accuracy += l.correct ? 1.0 : 0.0;
  }
  std::vector<ClassLength> out;
  for (auto& [id, c] : by_class) {
    c.mean_length /= c.episodes;
    c.accuracy /= c.episodes;
    out.push_back(c);
  }
  return out;
}

struct LengthDifficultyReport {
  std::vector<ClassLength> classes;
  Correlation correlation;
};

// Pearson over classes of (difficulty score, mean episode length).
inline LengthDifficultyReport length_difficulty_report(const std::vector<EpisodeLog>& logs,
                                                       const std::vector<std::optional<double>>& difficulty) {
  LengthDifficultyReport r;
  r.classes = class_lengths(logs);
  std::vector<double> x, y;
  for (auto& c : r.classes) {
    if (c.class_id >= static_cast<int>(difficulty.size()) || !difficulty[static_cast<std::size_t>(c.class_id)]) {
      throw DataError("no difficulty score for class " + std::to_string(c.class_id) +
                      (c.class_name.empty() ? "" : " ('" + c.class_name + "')"));
    }
    c.difficulty = difficulty[static_cast<std::size_t>(c.class_id)];
    x.push_back(*c.difficulty);
    y.push_back(c.mean_length);
  }
  r.correlation = pearson(x, y);
  return r;
}

// ---- multi-seed stability ----

struct RunMetrics {
  std::uint64_t seed = 0;
  double acc_k = 0.0;
  double acc_1 = 0.0;
  double loss = 0.0;
};

struct StabilityReport {
  std::vector<RunMetrics> runs;
  MeanVariance acc_k, acc_1, loss;
};

inline StabilityReport stability_report(const std::vector<RunMetrics>& runs) {
  if (runs.size() < 2) throw UndefinedStatisticError("stability needs at least 2 runs");
  StabilityReport s;
  s.runs = runs;
  std::vector<double> k, one, loss;
  for (const auto& r : runs) {
    k.push_back(r.acc_k);
    one.push_back(r.acc_1);
    loss.push_back(r.loss);
  }
  s.acc_k = mean_variance(k);
  s.acc_1 = mean_variance(one);
  s.loss = mean_variance(loss);
  return s;
}

// ---- CSV output ----

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline std::string length_bins_csv(const std::vector<LengthBin>& bins) {
  std::ostringstream os;
  os << "length,count,correct,accuracy\n";
  for (const auto& b : bins) os << b.length << ',' << b.count << ',' << b.correct << ',' << fmt(b.accuracy()) << '\n';
  return os.str();
}

inline std::string class_lengths_csv(const std::vector<ClassLength>& classes) {
  std::ostringstream os;
  os << "class_id,class_name,episodes,mean_length,accuracy,difficulty\n";
  for (const auto& c : classes) {
    os << c.class_id << ',' << csv_quote(c.class_name) << ',' << c.episodes << ',' << fmt(c.mean_length) << ','
       << fmt(c.accuracy) << ',' << (c.difficulty ? fmt(*c.difficulty) : "") << '\n';
  }
  return os.str();
}

inline std::string entropy_curves_csv(const EntropyCurves& c) {
  std::ostringstream os;
  os << "series,final_length,step,count,mean_entropy\n";
  for (const auto& [len, curve] : c.prediction_by_length) {
    for (const auto& p : curve) os << "prediction_by_length," << len << ',' << p.step << ',' << p.count << ',' << fmt(p.value) << '\n';
  }
  auto emit = [&](const char* name, const std::vector<CurvePoint>& curve) {
    for (const auto& p : curve) os << name << ",," << p.step << ',' << p.count << ',' << fmt(p.value) << '\n';
  };
  emit("prediction", c.prediction);
  emit("sender", c.sender);
  emit("receiver", c.receiver);
  return os.str();
}

// Raw per-step beliefs for probability-evolution plots.
inline std::string belief_table_csv(const std::vector<EpisodeLog>& logs) {
  std::ostringstream os;
  os << "episode,class_id,target,step,candidate,probability\n";
  for (std::size_t e = 0; e < logs.size(); ++e) {
    const auto& l = logs[e];
    for (std::size_t t = 0; t < l.beliefs.size(); ++t) {
      for (Eigen::Index i = 0; i < l.beliefs[t].size(); ++i) {
        os << e << ',' << l.class_id << ',' << l.target << ',' << t + 1 << ',' << i << ',' << fmt(l.beliefs[t](i)) << '\n';
      }
    }
  }
  return os.str();
}

inline std::string stability_csv(const StabilityReport& s) {
  std::ostringstream os;
  os << "seed,acc@K,acc@1,loss\n";
  for (const auto& r : s.runs) os << r.seed << ',' << fmt(r.acc_k) << ',' << fmt(r.acc_1) << ',' << fmt(r.loss) << '\n';
  os << "mean," << fmt(s.acc_k.mean) << ',' << fmt(s.acc_1.mean) << ',' << fmt(s.loss.mean) << '\n';
  os << "variance," << fmt(s.acc_k.variance) << ',' << fmt(s.acc_1.variance) << ',' << fmt(s.loss.variance) << '\n';
  return os.str();
}

// ---- message-dimension sweep ----

struct SweepSplitResult {
  int k = 1;
  double acc_k = 0.0;
  double acc_1 = 0.0;
};

struct SweepRow {
  int message_dim = 0;
  bool ok = false;
  std::string error;
  std::optional<SweepSplitResult> in_domain, out_of_domain, transfer;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "message_dim,status,in_domain_K,in_domain_acc@K,in_domain_acc@1,out_of_domain_K,"
        "out_of_domain_acc@K,out_of_domain_acc@1,transfer_K,transfer_acc@K,transfer_acc@1,error\n";
  auto cells = [&](const std::optional<SweepSplitResult>& r) {
    if (r) {
      os << ',' << r->k << ',' << fmt(r->acc_k) << ',' << fmt(r->acc_1);
    } else {
      os << ",,,";
    }
  };
  for (const auto& r : rows) {
    os << r.message_dim << ',' << (r.ok ? "ok" : "failed");
    cells(r.in_domain);
    cells(r.out_of_domain);
    cells(r.transfer);
    os << ',' << csv_quote(r.error) << '\n';
  }
  return os.str();
}

// Input files of the plotting component, with their exact header columns.
struct FigureInput {
  std::string figure;
  std::string file;
  std::vector<std::string> columns;
};

inline std::vector<FigureInput> figure_inputs() {
  return {
      {"difficulty_vs_length", "class_lengths.csv",
       {"class_id", "class_name", "episodes", "mean_length", "accuracy", "difficulty"}},
      {"accuracy_vs_length", "length_bins.csv", {"length", "count", "correct", "accuracy"}},
      {"entropy_curves", "entropy_curves.csv", {"series", "final_length", "step", "count", "mean_entropy"}},
      {"bandwidth_sweep", "sweep.csv",
       {"message_dim", "status", "in_domain_K", "in_domain_acc@K", "in_domain_acc@1", "out_of_domain_K",
        "out_of_domain_acc@K", "out_of_domain_acc@1", "transfer_K", "transfer_acc@K", "transfer_acc@1", "error"}},
      {"learning_curves", "training_log.csv",
       {"epoch", "train_loss", "L_c", "L_r", "L_B", "H_stop", "H_msg", "val_acc@K", "val_acc@1", "mean_length"}},
  };
}

// ---- full report ----

struct SplitAccuracy {
  std::string split;
  int episodes = 0;
  int k = 1;
  double acc_k = 0.0;
  double acc_1 = 0.0;
  double mean_length = 0.0;
};

struct AggregateReport {
  std::vector<SplitAccuracy> splits;
  std::vector<LengthBin> bins;
  EntropyCurves curves;
  std::vector<ClassLength> classes;
  std::optional<Correlation> correlation;
  std::string correlation_error;
};

// `k_for` maps |O_R| to K.
inline AggregateReport build_report(const std::vector<EpisodeLog>& logs, int max_steps,
                                    const std::function<int(int)>& k_for,
                                    const std::vector<std::optional<double>>& difficulty = {}) {
  if (logs.empty()) throw DataError("no episodes to analyze");
  AggregateReport r;
  std::map<std::string, std::vector<EpisodeLog>> by_split;
  for (const auto& l : logs) by_split[l.split].push_back(l);
  for (const auto& [name, group] : by_split) {
    SplitAccuracy s;
    s.split = name;
    s.episodes = static_cast<int>(group.size());
    s.k = k_for(group.front().num_candidates);
    s.acc_k = accuracy_at_k(group, s.k);
    s.acc_1 = accuracy_at_k(group, 1);
    for (const auto& l : group) s.mean_length += l.length;
    s.mean_length /= s.episodes;
    r.splits.push_back(s);
  }
  r.bins = length_bins(logs, max_steps);
  r.curves = entropy_curves(logs);
  if (difficulty.empty()) {
    r.classes = class_lengths(logs);
  } else {
    try {
      auto ld = length_difficulty_report(logs, difficulty);
      r.classes = std::move(ld.classes);
      r.correlation = ld.correlation;
    } catch (const UndefinedStatisticError& e) {
      r.classes = class_lengths(logs);
      r.correlation_error = e.what();
    }
  }
  return r;
}

inline nlohmann::json summary_json(const AggregateReport& r) {
  nlohmann::json j;
  j["reference"] = reference_values();
  j["length_buckets"] = "exact final length";
  j["splits"] = nlohmann::json::array();
  for (const auto& s : r.splits) {
    j["splits"].push_back({{"split", s.split},
                           {"episodes", s.episodes},
                           {"K", s.k},
                           {"acc_at_k", s.acc_k},
                           {"acc_at_1", s.acc_1},
                           {"mean_length", s.mean_length}});
  }
  if (r.correlation) {
    j["length_difficulty"] = {{"r", r.correlation->r}, {"p", r.correlation->p}, {"n", r.correlation->n}};
  } else if (!r.correlation_error.empty()) {
    j["length_difficulty"] = {{"error", r.correlation_error}};
  }
  return j;
}

// Writes summary.json, length_bins.csv, class_lengths.csv,
// entropy_curves.csv and beliefs.csv into dir.
inline void write_report(const std::filesystem::path& dir, const AggregateReport& r,
                         const std::vector<EpisodeLog>& logs) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "summary.json", summary_json(r).dump(2) + "\n");
  io::write_text(dir / "length_bins.csv", length_bins_csv(r.bins));
  io::write_text(dir / "class_lengths.csv", class_lengths_csv(r.classes));
  io::write_text(dir / "entropy_curves.csv", entropy_curves_csv(r.curves));
  io::write_text(dir / "beliefs.csv", belief_table_csv(logs));
}

}  // namespace refgame::analysis
