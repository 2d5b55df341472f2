#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace beamsel {

/// Shortest decimal text that parses back to the same double ('.' separator).
std::string format_double(double v);

/// Quotes a field when it holds a comma, quote, CR or LF (RFC 4180).
std::string csv_escape(const std::string& field);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& os_;
};

}  // namespace beamsel
