#pragma once

#include <filesystem>
#include <string>

#include "fraudx/bench.hpp"
#include "json.hpp"

namespace fraudx {

using Json = nlohmann::ordered_json;

Json to_json(const Attribution& attr);
Json to_json(const RankedFeatures& ranked);
Json to_json(const EvalReport& report);
Json to_json(const Table1Row& row);  // adds the reference row and AUC flag when one exists
Json to_json(const AgreementReport& report);
Json to_json(const SensitivityRow& row);
Json to_json(const BenchRecord& record);
Json to_json(const TradeoffRow& row);
Json to_json(const StudyReport& report);

// Two-space indent, trailing newline. Doubles print with round-trip precision.
std::string dump(const Json& json);

// CSV companions, one per table. Header row first, fields in JSON order.
std::string table1_csv(const std::vector<Table1Row>& rows);
std::string agreement_csv(const std::vector<AgreementReport>& rows);
std::string sensitivity_csv(const std::vector<SensitivityRow>& rows);
std::string timing_csv(const std::vector<BenchRecord>& rows);
std::string tradeoff_csv(const std::vector<TradeoffRow>& rows);

// report.json plus <table>.csv for every nonempty table.
void write_report(const StudyReport& report, const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fraudx
