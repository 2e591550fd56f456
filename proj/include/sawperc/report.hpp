#pragma once

// Report serialization: RFC-4180 CSV and insertion-ordered JSON. Reals are
// written in shortest round-trip form so equal results give equal bytes.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sawperc/estimators.hpp"
#include "sawperc/measures.hpp"
#include "sawperc/stats.hpp"

namespace sawperc {

using Json = nlohmann::ordered_json;

/// Bumped whenever a CSV header or JSON key changes.
inline constexpr int kReportSchemaVersion = 1;

/// Quotes a field when it contains a comma, quote, CR or LF; doubles quotes.
std::string csv_field(std::string_view s);
/// Shortest representation that parses back to the same double.
std::string format_real(double x);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    /// Fields joined by commas, terminated by CRLF.
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

Json to_json(const EstimateWithCI& e);
Json to_json(const GrowthSeries& g);
Json to_json(const FractionalMoment& f);
Json to_json(const CouplingReport& c);
Json to_json(const BetaReport& b);
Json to_json(const FredoBundle& b);
Json to_json(const FredoMc& m);
Json to_json(const ConditionalQFormMoments& m);
Json to_json(const BoundCheck& b);

/// Header: n,annealed,quenched_mean,quenched_se,gap,retention.
void write_growth_csv(std::ostream& out, const GrowthSeries& g);

} // namespace sawperc
