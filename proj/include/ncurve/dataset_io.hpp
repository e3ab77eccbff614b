#pragma once

#include <filesystem>
#include <string>

#include "ncurve/datagen.hpp"

namespace ncurve {

enum class SequenceFormat { Auto, Jsonl, Csv };

SequenceFormat sequence_format_from_string(const std::string& name);

struct LoadOptions {
  SequenceFormat format = SequenceFormat::Auto;  // Auto: by file extension
  bool scale = false;                            // min-max map to [-1, 1]
};

/// Reads sequences from JSONL (one {"id", "points", "control"?} object per
/// line) or CSV (header seq_id,step,x0..x{d-1}[,control]).
/// Errors: ParseError/RaggedSequence with a 1-based line number, EmptyFile.
SequenceDataset load_sequences(const std::filesystem::path& path, const LoadOptions& options = {});

void save_jsonl(const SequenceDataset& data, const std::filesystem::path& path);
void save_csv(const SequenceDataset& data, const std::filesystem::path& path);

/// Fits per-axis min/max over every point of every sequence.
MinMaxScaler fit_scaler(const SequenceDataset& data);
void apply_scaler(SequenceDataset& data, const MinMaxScaler& scaler);
void invert_scaler(SequenceDataset& data, const MinMaxScaler& scaler);

nlohmann::json scaler_to_json(const MinMaxScaler& scaler);
MinMaxScaler scaler_from_json(const nlohmann::json& j);

/// Round-trip decimal representation of a double (%.17g).
std::string format_double(double v);

}  // namespace ncurve
