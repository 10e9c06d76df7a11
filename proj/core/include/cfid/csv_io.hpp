#pragma once

#include <filesystem>
#include <string>

#include "cfid/domain.hpp"

namespace cfid {

// Sequence files carry the header `t,v,a,h,hdot`, one row per frame at the
// fixed rate; datasets are laid out as <root>/<driver_id>/<seq>.csv.

void write_sequence_csv(const std::filesystem::path& path,
                        const CarFollowingSequence& seq);
CarFollowingSequence read_sequence_csv(const std::filesystem::path& path);

void write_dataset_csv(const std::filesystem::path& root, const Dataset& ds);
Dataset read_dataset_csv(const std::filesystem::path& root,
                         const std::string& split = "");

// Writes content to a temp file in the target directory and renames it over
// the destination, so partially written files are never observed.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace cfid
