#include "dialogctl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace dialogctl {

using nlohmann::json;

std::string fmt(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string text_table(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], row[i].size());

  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < cells.size() ? cells[i] : "";
      if (i) out << "  ";
      out << std::string(width[i] - cell.size(), ' ') << cell;
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& row : rows) line(row);
  return out.str();
}

std::string loo_csv(const LooResult& r) {
  std::ostringstream out;
  out << "train_size,turn_accuracy,dialog_accuracy\n";
  for (const auto& row : r.rows)
    out << row.train_size << ',' << fmt(row.turn_accuracy, 6) << ','
        << fmt(row.dialog_accuracy, 6) << '\n';
  return out.str();
}

std::string loo_folds_csv(const LooResult& r) {
  std::ostringstream out;
  out << "held_out,train_size,turn_accuracy,dialog_correct,reconstructed,epochs\n";
  for (const auto& f : r.folds)
    out << f.held_out << ',' << f.train_size << ',' << fmt(f.turn_accuracy, 6) << ','
        << f.dialog_correct << ',' << f.reconstructed << ',' << f.epochs << '\n';
  return out.str();
}

std::string arch_csv(const std::vector<ArchCell>& cells) {
  std::ostringstream out;
  out << "model,dialogs,reconstructed,epochs\n";
  for (const auto& c : cells)
    out << to_string(c.kind) << ',' << c.dialogs << ',' << c.reconstructed << ',' << c.epochs
        << '\n';
  return out.str();
}

std::string roc_curve_csv(const RocResult& r) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  for (const auto& p : r.curve)
    out << fmt(p.threshold, 8) << ',' << fmt(p.fpr, 6) << ',' << fmt(p.tpr, 6) << '\n';
  return out.str();
}

std::string roc_scores_csv(const RocResult& r) {
  std::ostringstream out;
  out << "score,correct\n";
  for (const auto& s : r.scored) out << fmt(s.score, 8) << ',' << s.correct << '\n';
  return out.str();
}

std::string rl_curves_csv(const std::vector<phone::RlCurve>& curves) {
  std::ostringstream out;
  out << "n_sl,dialogs,mean,stddev,runs\n";
  for (const auto& c : curves)
    for (std::size_t j = 0; j < c.checkpoints.size(); ++j)
      out << c.n_sl << ',' << c.checkpoints[j] << ',' << fmt(c.mean[j], 6) << ','
          << fmt(c.stddev[j], 6) << ',' << c.runs.size() << '\n';
  return out.str();
}

std::string rl_runs_csv(const std::vector<phone::RlCurve>& curves) {
  std::ostringstream out;
  out << "n_sl,run,dialogs,tcr\n";
  for (const auto& c : curves)
    for (std::size_t r = 0; r < c.runs.size(); ++r)
      for (std::size_t j = 0; j < c.runs[r].checkpoints.size(); ++j)
        out << c.n_sl << ',' << r << ',' << c.runs[r].checkpoints[j] << ','
            << fmt(c.runs[r].tcr[j], 6) << '\n';
  return out.str();
}

std::string loo_table(const LooResult& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : r.rows)
    rows.push_back({std::to_string(row.train_size), fmt(row.turn_accuracy, 3),
                    fmt(row.dialog_accuracy, 3)});
  return text_table({"train dialogs", "turn accuracy", "dialog accuracy"}, rows);
}

std::string arch_table(const std::vector<ArchCell>& cells) {
  std::vector<std::size_t> sizes;
  std::vector<ModelKind> kinds;
  for (const auto& c : cells) {
    if (std::find(sizes.begin(), sizes.end(), c.dialogs) == sizes.end()) sizes.push_back(c.dialogs);
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) kinds.push_back(c.kind);
  }
  std::vector<std::string> header{"model"};
  for (auto n : sizes) header.push_back(std::to_string(n) + " dialogs");
  std::vector<std::vector<std::string>> rows;
  for (auto k : kinds) {
    std::vector<std::string> row{std::string(to_string(k))};
    for (auto n : sizes) {
      std::string cell = "-";
      for (const auto& c : cells)
        if (c.kind == k && c.dialogs == n)
          cell = std::string(c.reconstructed ? "yes" : "no") + " (" + std::to_string(c.epochs) +
                 " ep)";
      row.push_back(cell);
    }
    rows.push_back(row);
  }
  return text_table(header, rows);
}

std::string roc_table(const RocResult& r, std::size_t lowest) {
  std::size_t wrong = 0;
  for (const auto& s : r.scored) wrong += s.correct ? 0 : 1;
  return text_table({"actions", "incorrect", "auc", "incorrect among lowest " + std::to_string(lowest)},
                    {{std::to_string(r.scored.size()), std::to_string(wrong), fmt(r.auc, 3),
                      fmt(incorrect_fraction_lowest(r.scored, lowest), 3)}});
}

std::string rl_table(const std::vector<phone::RlCurve>& curves) {
  std::vector<std::string> header{"dialogs"};
  for (const auto& c : curves) header.push_back("n_sl=" + std::to_string(c.n_sl) + " mean (sd)");
  std::vector<std::vector<std::string>> rows;
  if (!curves.empty())
    for (std::size_t j = 0; j < curves.front().checkpoints.size(); ++j) {
      std::vector<std::string> row{std::to_string(curves.front().checkpoints[j])};
      for (const auto& c : curves)
        row.push_back(j < c.mean.size() ? fmt(c.mean[j], 3) + " (" + fmt(c.stddev[j], 3) + ")"
                                        : "-");
      rows.push_back(row);
    }
  return text_table(header, rows);
}

json to_json(const LooResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"train_size", row.train_size},
                    {"turn_accuracy", row.turn_accuracy},
                    {"dialog_accuracy", row.dialog_accuracy}});
  return json{{"rows", rows}};
}

json to_json(const std::vector<ArchCell>& cells) {
  json out = json::array();
  for (const auto& c : cells)
    out.push_back({{"model", std::string(to_string(c.kind))},
                   {"dialogs", c.dialogs},
                   {"reconstructed", c.reconstructed},
                   {"epochs", c.epochs}});
  return out;
}

json to_json(const RocResult& r, std::size_t lowest) {
  json curve = json::array();
  for (const auto& p : r.curve) curve.push_back({p.threshold, p.fpr, p.tpr});
  return json{{"actions", r.scored.size()},
              {"auc", r.auc},
              {"incorrect_fraction_lowest", incorrect_fraction_lowest(r.scored, lowest)},
              {"lowest", lowest},
              {"curve", curve}};
}

json to_json(const phone::RlCurve& c) {
  json runs = json::array();
  for (const auto& run : c.runs)
    runs.push_back({{"tcr", run.tcr},
                    {"sl_dialogs", run.sl_dialogs},
                    {"repairs", run.repairs},
                    {"rollbacks", run.rollbacks},
                    {"always_reconstructed", run.always_reconstructed}});
  return json{{"n_sl", c.n_sl},
              {"checkpoints", c.checkpoints},
              {"mean", c.mean},
              {"stddev", c.stddev},
              {"runs", runs}};
}

json to_json(const SlReport& r) {
  return json{{"epochs", r.epochs},
              {"reconstructed", r.reconstructed},
              {"plateaued", r.plateaued},
              {"seconds", r.seconds},
              {"final_loss", r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()}};
}

}  // namespace dialogctl
