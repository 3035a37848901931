#pragma once

#include <string>

#include "kt/types.hpp"

namespace kt {

// A prepared dataset is a directory of plain files, chosen so external tools
// can diff and oracle-check them:
//   meta.json         vocab sizes and Table-style stats
//   kcmap.csv         question_id,kc_id (one row per pair, ascending)
//   interactions.csv  student_id,step,question_id,correct

void save_dataset(const InteractionLog& log, const std::string& dir);

InteractionLog load_dataset(const std::string& dir);

/// FNV-1a over the three files' bytes; identifies a dataset in run manifests.
std::uint64_t dataset_fingerprint(const std::string& dir);

}  // namespace kt
