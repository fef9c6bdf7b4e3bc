#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdbpe/features.hpp"
#include "pdbpe/pipeline.hpp"
#include "pdbpe/types.hpp"

namespace pdbpe::io {

inline constexpr int kModelFormatVersion = 1;

/// Long-format data: header `series_id,channel,t,value`. Absent timesteps (or
/// empty values) become unobserved entries. Series and channels keep their
/// order of first appearance.
Dataset read_data_csv(std::istream& in, const std::string& source = "<data>");
Dataset read_data_csv(const std::filesystem::path& path);
void write_data_csv(std::ostream& out, const Dataset& data);

struct LabelRow {
    std::string label;
    std::optional<std::string> group_id;
};

/// Header `series_id,label[,group_id]`.
using LabelTable = std::map<std::string, LabelRow>;
LabelTable read_labels_csv(std::istream& in, const std::string& source = "<labels>");
LabelTable read_labels_csv(const std::filesystem::path& path);

enum class LabelKind { Regression, Classification };

/// All labels numeric -> regression, none numeric -> classification, mixed -> DataError.
LabelKind detect_label_kind(const LabelTable& labels);

/// Copies labels and group ids onto matching series. Series without a row are left unlabeled.
void attach_labels(Dataset& data, const LabelTable& labels, LabelKind kind);

/// `series_id,<names...>` with 17 significant digits.
void write_features_csv(std::ostream& out, const FeatureMatrix& m);
void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_features_csv(std::istream& in, const std::string& source = "<features>");
FeatureMatrix read_features_csv(const std::filesystem::path& path);

/// Flat `key = value` lines, '#' comments. Keys mirror PipelineConfig fields.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {}, const std::string& source = "<config>");
PipelineConfig parse_config(const std::filesystem::path& path, PipelineConfig base = {});
/// Applies one `key`/`value` pair; used for both files and command-line overrides.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
std::string format_config(const PipelineConfig& config);

std::string model_to_text(const FittedModel& model);
FittedModel model_from_text(const std::string& text);
void save_model(const std::filesystem::path& path, const FittedModel& model);
FittedModel load_model(const std::filesystem::path& path);

/// FNV-1a of the serialized model; equal fingerprints mean identical fitted state.
std::uint64_t model_fingerprint(const FittedModel& model);

/// Writes via a temporary file and rename so failed commands leave no partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_double(double v);

}  // namespace pdbpe::io
