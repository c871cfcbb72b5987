#include "ms/data.hpp"

#include "ms/errors.hpp"
#include "ms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace ms {

namespace {

bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

bool parse_int(const std::string& tok, long& out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    out = std::strtol(begin, &end, 10);
    return end != begin && *end == '\0';
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == '\t') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
    return fields;
}

double draw_normal(Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace

std::vector<LabeledSeries> load_ucr_tsv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);

    std::vector<std::string> raw_labels;
    std::vector<Series> raw_series;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) continue; // blank line
        if (fields.size() < 2)
            throw DataError(path + ":" + std::to_string(line_no) + ": no values after label");

        Series values;
        values.reserve(fields.size() - 1);
        for (size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            if (!parse_double(fields[i], v))
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": non-numeric value '" + fields[i] + "'");
            values.push_back(v);
        }
        while (!values.empty() && std::isnan(values.back())) values.pop_back(); // NaN padding
        for (double v : values)
            if (std::isnan(v))
                throw DataError(path + ":" + std::to_string(line_no) + ": interior NaN");
        if (values.empty())
            throw DataError(path + ":" + std::to_string(line_no) + ": series is empty");

        raw_labels.push_back(fields[0]);
        raw_series.push_back(std::move(values));
    }
    if (raw_labels.empty()) throw DataError(path + ": empty file");

    bool all_int = true;
    std::vector<long> int_labels(raw_labels.size());
    for (size_t i = 0; i < raw_labels.size(); ++i)
        if (!parse_int(raw_labels[i], int_labels[i])) { all_int = false; break; }

    std::vector<LabeledSeries> out(raw_labels.size());
    if (all_int) {
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = {static_cast<int>(int_labels[i]), std::move(raw_series[i])};
    } else {
        std::map<std::string, int> dense; // first-seen order
        int next_id = 0;
        for (size_t i = 0; i < out.size(); ++i) {
            auto [it, inserted] = dense.try_emplace(raw_labels[i], next_id);
            if (inserted) ++next_id;
            out[i] = {it->second, std::move(raw_series[i])};
        }
    }
    return out;
}

void write_ucr_tsv(const std::string& path, const std::vector<LabeledSeries>& data) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    char buf[32];
    for (const auto& row : data) {
        os << row.label;
        for (double v : row.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            os << '\t' << buf;
        }
        os << '\n';
    }
}

Series znormalize(const Series& s) {
    if (s.empty()) return s;
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size());
    const double std_dev = std::sqrt(var);

    Series out(s.size());
    if (std_dev < 1e-12) return Series(s.size(), 0.0);
    for (size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - mean) / std_dev;
    return out;
}

std::vector<LabeledSeries> truncate_to_min_length(std::vector<LabeledSeries> data) {
    if (data.empty()) return data;
    size_t min_len = data.front().values.size();
    for (const auto& d : data) min_len = std::min(min_len, d.values.size());
    for (auto& d : data) d.values.resize(min_len);
    return data;
}

std::vector<LabeledSeries> gen_synthetic(const std::string& kind, int n, int length,
                                         uint64_t seed) {
    if (kind != "sine-mix" && kind != "cbf" && kind != "step")
        throw UsageError("gen_synthetic: unknown kind '" + kind + "'");
    if (n > 0 && length < 8) throw UsageError("gen_synthetic: length must be >= 8");

    Rng rng(seed);
    std::vector<LabeledSeries> out;
    out.reserve(n);

    for (int i = 0; i < n; ++i) {
        LabeledSeries row;
        row.values.resize(length);
        if (kind == "sine-mix") {
            const int cycles = (i % 2 == 0) ? 1 : 3;
            row.label = cycles;
            const double phase = 2.0 * std::numbers::pi * rng.uniform();
            for (int t = 0; t < length; ++t)
                row.values[t] = std::sin(2.0 * std::numbers::pi * cycles * t / length + phase) +
                                0.1 * draw_normal(rng);
        } else if (kind == "cbf") {
            row.label = i % 3; // 0 cylinder, 1 bell, 2 funnel
            const int a = length / 8 + static_cast<int>(rng.uniform() * (length / 8));
            const int b = length / 2 + static_cast<int>(rng.uniform() * (3 * length / 8));
            const double amp = 6.0 + draw_normal(rng);
            for (int t = 0; t < length; ++t) {
                double g = 0.0;
                if (t >= a && t < b) {
                    if (row.label == 0) g = 1.0;
                    else if (row.label == 1) g = static_cast<double>(t - a) / (b - a);
                    else g = static_cast<double>(b - t) / (b - a);
                }
                row.values[t] = amp * g + 0.3 * draw_normal(rng);
            }
        } else { // step
            row.label = i % 2;
            const double sign = row.label == 0 ? 1.0 : -1.0;
            const int change = length / 4 + static_cast<int>(rng.uniform() * (length / 2));
            for (int t = 0; t < length; ++t)
                row.values[t] = sign * (t >= change ? 1.0 : -1.0) + 0.1 * draw_normal(rng);
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace ms
