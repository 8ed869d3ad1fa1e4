#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dialogctl/phone/experiments.hpp"
#include "dialogctl/sl_trainer.hpp"

namespace dialogctl {

/// Fixed-width text table with a header rule.
std::string text_table(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

std::string fmt(double v, int precision = 4);

// CSV writers. Every file starts with a header line.
std::string loo_csv(const LooResult& r);        // train_size,turn_accuracy,dialog_accuracy
std::string loo_folds_csv(const LooResult& r);  // held_out,train_size,turn_accuracy,...
std::string arch_csv(const std::vector<ArchCell>& cells);
std::string roc_curve_csv(const RocResult& r);  // threshold,fpr,tpr
std::string roc_scores_csv(const RocResult& r); // score,correct
std::string rl_curves_csv(const std::vector<phone::RlCurve>& curves);  // n_sl,dialogs,mean,stddev,runs
std::string rl_runs_csv(const std::vector<phone::RlCurve>& curves);    // n_sl,run,dialogs,tcr

std::string loo_table(const LooResult& r);
std::string arch_table(const std::vector<ArchCell>& cells);
std::string roc_table(const RocResult& r, std::size_t lowest = 20);
std::string rl_table(const std::vector<phone::RlCurve>& curves);

nlohmann::json to_json(const LooResult& r);
nlohmann::json to_json(const std::vector<ArchCell>& cells);
nlohmann::json to_json(const RocResult& r, std::size_t lowest = 20);
nlohmann::json to_json(const phone::RlCurve& c);
nlohmann::json to_json(const SlReport& r);

}  // namespace dialogctl
