#pragma once

// JSON documents for checkpoints, configs and reports. Object readers reject
// unknown keys; non-finite doubles are written as null and read back as NaN.

#include <string>

#include "json.hpp"

#include "hjbnn/config.hpp"
#include "hjbnn/critic.hpp"
#include "hjbnn/datasets.hpp"
#include "hjbnn/harness.hpp"
#include "hjbnn/network.hpp"
#include "hjbnn/optimizers.hpp"

namespace hjbnn {

using Json = nlohmann::json;

void to_json(Json& j, const Matrix& m);
void from_json(const Json& j, Matrix& m);
void to_json(Json& j, const Architecture& a);
void from_json(const Json& j, Architecture& a);
void to_json(Json& j, const Network& n);
void from_json(const Json& j, Network& n);
void to_json(Json& j, const Dataset& d);
void from_json(const Json& j, Dataset& d);
void to_json(Json& j, const CriticConfig& c);
void from_json(const Json& j, CriticConfig& c);
void to_json(Json& j, const TrainerConfig& c);
void from_json(const Json& j, TrainerConfig& c);
void to_json(Json& j, const TrialResult& r);
void from_json(const Json& j, TrialResult& r);
void to_json(Json& j, const DatasetSpec& s);
void from_json(const Json& j, DatasetSpec& s);
void to_json(Json& j, const Experiment& e);
void from_json(const Json& j, Experiment& e);
void to_json(Json& j, const TrialRecord& t);
void from_json(const Json& j, TrialRecord& t);
void to_json(Json& j, const AlgorithmReport& a);
void from_json(const Json& j, AlgorithmReport& a);
void to_json(Json& j, const SuccessReport& r);
void from_json(const Json& j, SuccessReport& r);

/// Throws IoError if unreadable, ParseError if not valid JSON.
Json read_json_file(const std::string& path);
/// Throws IoError if the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

namespace json_detail {

/// Throws ParseError naming the first key of `j` outside `allowed`.
void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const char* what);
Json number(double v);
double read_number(const Json& j);

}  // namespace json_detail

}  // namespace hjbnn
