#include "hts/panel.hpp"

#include "hts/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace hts {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string_view rest(line);
    while (true) {
        auto pos = rest.find(',');
        out.push_back(trim(rest.substr(0, pos)));
        if (pos == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(pos + 1);
    }
    return out;
}

double parse_cell(const std::string& cell, int row, int col) {
    if (cell.empty()) {
        throw ParseError("missing value at data row " + std::to_string(row) + ", column " +
                         std::to_string(col));
    }
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError("invalid number '" + cell + "' at data row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    }
    return value;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------- Grouping

Grouping::Grouping(int m) : m_(m), c_(0, m) {
    if (m < 1) {
        throw ArgumentError("grouping needs at least one bottom series");
    }
}

Grouping::Grouping(Eigen::MatrixXd c, std::vector<std::string> middle_ids)
    : m_(static_cast<int>(c.cols())), c_(std::move(c)), ids_(std::move(middle_ids)) {
    if (m_ < 1) {
        throw ArgumentError("grouping needs at least one bottom series");
    }
    if (ids_.empty()) {
        for (int r = 0; r < rows(); ++r) {
            ids_.push_back("M" + std::to_string(r + 1));
        }
    }
    if (static_cast<int>(ids_.size()) != rows()) {
        throw ArgumentError("middle id count does not match grouping rows");
    }
    std::set<std::string> seen;
    for (int r = 0; r < rows(); ++r) {
        for (int j = 0; j < m_; ++j) {
            double v = c_(r, j);
            if (v != 0.0 && v != 1.0) {
                throw ArgumentError("grouping entries must be 0 or 1");
            }
        }
        if (row_sum(r) == 0) {
            throw ArgumentError("grouping row " + std::to_string(r) + " is all zeros");
        }
        if (!seen.insert(row_key(r)).second) {
            throw ArgumentError("grouping row " + std::to_string(r) + " duplicates an earlier row");
        }
    }
}

std::vector<int> Grouping::members(int row) const {
    std::vector<int> out;
    for (int j = 0; j < m_; ++j) {
        if (c_(row, j) != 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

int Grouping::row_sum(int row) const {
    return static_cast<int>(c_.row(row).sum());
}

std::string Grouping::row_key(int row) const {
    std::string key(static_cast<size_t>(m_), '0');
    for (int j = 0; j < m_; ++j) {
        if (c_(row, j) != 0.0) {
            key[static_cast<size_t>(j)] = '1';
        }
    }
    return key;
}

Eigen::MatrixXd summing_matrix(const Grouping& g) {
    const int m = g.m();
    const int k = g.rows();
    Eigen::MatrixXd s(1 + k + m, m);
    s.row(0).setOnes();
    s.middleRows(1, k) = g.matrix();
    s.bottomRows(m).setIdentity();
    return s;
}

// ---------------------------------------------------------------- dates

int parse_year_month(const std::string& text) {
    int year = 0;
    int month = 0;
    if (text.size() != 7 || text[4] != '-') {
        throw FormatError("date '" + text + "' is not YYYY-MM");
    }
    auto y = std::from_chars(text.data(), text.data() + 4, year);
    auto m = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (y.ec != std::errc() || y.ptr != text.data() + 4 || m.ec != std::errc() ||
        m.ptr != text.data() + 7 || month < 1 || month > 12) {
        throw FormatError("date '" + text + "' is not YYYY-MM");
    }
    return year * 12 + (month - 1);
}

std::string format_year_month(int period) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", period / 12, period % 12 + 1);
    return buf;
}

// ---------------------------------------------------------------- SeriesPanel

SeriesPanel::SeriesPanel(Eigen::MatrixXd values, std::vector<std::string> ids, std::vector<int> periods,
                         int seasonal_period, std::vector<Level> levels, bool synthetic_top)
    : values_(std::move(values)), ids_(std::move(ids)), periods_(std::move(periods)), s_(seasonal_period),
      levels_(std::move(levels)), synthetic_top_(synthetic_top) {
    const auto n = static_cast<size_t>(values_.cols());
    if (ids_.size() != n || levels_.size() != n) {
        throw FormatError("panel ids/levels do not match column count");
    }
    if (periods_.size() != static_cast<size_t>(values_.rows())) {
        throw FormatError("panel timestamps do not match row count");
    }
    if (s_ < 1) {
        throw FormatError("seasonal period must be positive");
    }
    if (!values_.allFinite()) {
        throw ParseError("panel contains non-finite values");
    }
    for (size_t t = 1; t < periods_.size(); ++t) {
        if (periods_[t] != periods_[t - 1] + 1) {
            throw FormatError("timestamps must increase by exactly one period (row " + std::to_string(t) + ")");
        }
    }
    std::set<std::string> unique(ids_.begin(), ids_.end());
    if (unique.size() != n) {
        throw FormatError("series ids must be unique");
    }
    for (size_t j = 0; j < n; ++j) {
        if (levels_[j] == Level::top) {
            if (top_col_ >= 0) {
                throw FormatError("panel has more than one top series");
            }
            top_col_ = static_cast<int>(j);
        } else if (levels_[j] == Level::bottom) {
            bottom_cols_.push_back(static_cast<int>(j));
        }
    }
    if (top_col_ < 0) {
        throw FormatError("panel has no top series");
    }
    if (bottom_cols_.size() < 2) {
        throw FormatError("panel needs at least two bottom series");
    }
}

Eigen::MatrixXd SeriesPanel::bottom() const {
    Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(bottom_cols_.size()));
    for (size_t j = 0; j < bottom_cols_.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = values_.col(bottom_cols_[j]);
    }
    return out;
}

std::vector<std::string> SeriesPanel::bottom_ids() const {
    std::vector<std::string> out;
    out.reserve(bottom_cols_.size());
    for (int c : bottom_cols_) {
        out.push_back(ids_[static_cast<size_t>(c)]);
    }
    return out;
}

Eigen::VectorXd SeriesPanel::top() const {
    return values_.col(top_col_);
}

SeriesPanel SeriesPanel::head(int t) const {
    if (t < 1 || t > length()) {
        throw ArgumentError("head length out of range");
    }
    return SeriesPanel(values_.topRows(t), ids_, std::vector<int>(periods_.begin(), periods_.begin() + t), s_,
                       levels_, synthetic_top_);
}

SeriesPanel panel_from_bottom(const Eigen::MatrixXd& bottom, std::vector<std::string> ids, int first_period,
                              int seasonal_period) {
    const auto rows = bottom.rows();
    const auto m = bottom.cols();
    Eigen::MatrixXd values(rows, m + 1);
    values.leftCols(m) = bottom;
    values.col(m) = bottom.rowwise().sum();
    std::vector<Level> levels(static_cast<size_t>(m), Level::bottom);
    levels.push_back(Level::top);
    std::string top_id = "Total";
    while (std::find(ids.begin(), ids.end(), top_id) != ids.end()) {
        top_id += "_";
    }
    ids.push_back(top_id);
    std::vector<int> periods(static_cast<size_t>(rows));
    for (Eigen::Index t = 0; t < rows; ++t) {
        periods[static_cast<size_t>(t)] = first_period + static_cast<int>(t);
    }
    return SeriesPanel(values, std::move(ids), std::move(periods), seasonal_period, std::move(levels), true);
}

// ---------------------------------------------------------------- CSV

SeriesPanel read_panel(std::istream& in, int seasonal_period, const std::vector<std::string>& middle_ids,
                       const std::string& top_id) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("panel file is empty");
    }
    auto header = split_csv_line(line);
    if (header.size() < 3) {
        throw FormatError("panel needs a date column and at least two series columns");
    }
    std::vector<std::string> ids(header.begin() + 1, header.end());

    std::vector<int> periods;
    std::vector<std::vector<double>> rows;
    int row_no = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        ++row_no;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("data row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(header.size()));
        }
        int period = parse_year_month(cells[0]);
        if (!periods.empty() && period <= periods.back()) {
            throw FormatError("timestamps are not increasing at data row " + std::to_string(row_no));
        }
        periods.push_back(period);
        std::vector<double> vals;
        vals.reserve(ids.size());
        for (size_t c = 1; c < cells.size(); ++c) {
            vals.push_back(parse_cell(cells[c], row_no, static_cast<int>(c)));
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) {
        throw FormatError("panel has no data rows");
    }

    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ids.size()));
    for (size_t t = 0; t < rows.size(); ++t) {
        for (size_t j = 0; j < ids.size(); ++j) {
            values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
        }
    }

    std::set<std::string> middle(middle_ids.begin(), middle_ids.end());
    std::vector<Level> levels;
    bool has_top = false;
    for (const auto& id : ids) {
        if (!middle.empty() && id == top_id) {
            levels.push_back(Level::top);
            has_top = true;
        } else if (middle.count(id) != 0) {
            levels.push_back(Level::middle);
        } else {
            levels.push_back(Level::bottom);
        }
    }
    if (has_top) {
        return SeriesPanel(values, ids, periods, seasonal_period, levels, false);
    }

    // Synthesise the top from the bottom columns, keeping any middle columns.
    std::string total = top_id;
    while (std::find(ids.begin(), ids.end(), total) != ids.end()) {
        total += "_";
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(values.rows());
    for (size_t j = 0; j < ids.size(); ++j) {
        if (levels[j] == Level::bottom) {
            sum += values.col(static_cast<Eigen::Index>(j));
        }
    }
    Eigen::MatrixXd with_top(values.rows(), values.cols() + 1);
    with_top << values, sum;
    ids.push_back(total);
    levels.push_back(Level::top);
    return SeriesPanel(with_top, ids, periods, seasonal_period, levels, true);
}

SeriesPanel read_panel(const std::filesystem::path& path, int seasonal_period,
                       const std::optional<std::filesystem::path>& hierarchy, const std::string& top_id) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open panel file " + path.string());
    }
    std::vector<std::string> middle_ids;
    if (hierarchy) {
        std::ifstream hin(*hierarchy);
        if (!hin) {
            throw MetadataError("cannot open hierarchy file " + hierarchy->string());
        }
        nlohmann::ordered_json j;
        try {
            hin >> j;
        } catch (const nlohmann::json::exception& e) {
            throw MetadataError(std::string("invalid hierarchy JSON: ") + e.what());
        }
        if (!j.is_object()) {
            throw MetadataError("hierarchy JSON must be an object");
        }
        for (const auto& item : j.items()) {
            middle_ids.push_back(item.key());
        }
    }
    return read_panel(in, seasonal_period, middle_ids, top_id);
}

void write_panel(const SeriesPanel& panel, std::ostream& out) {
    std::vector<int> cols;
    for (int j = 0; j < panel.size(); ++j) {
        if (!(panel.synthetic_top() && j == panel.top_column())) {
            cols.push_back(j);
        }
    }
    out << "date";
    for (int c : cols) {
        out << ',' << panel.ids()[static_cast<size_t>(c)];
    }
    out << '\n';
    for (int t = 0; t < panel.length(); ++t) {
        out << format_year_month(panel.periods()[static_cast<size_t>(t)]);
        for (int c : cols) {
            out << ',' << format_value(panel.values()(t, c));
        }
        out << '\n';
    }
}

void write_panel(const SeriesPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write panel file " + path.string());
    }
    write_panel(panel, out);
}

// ---------------------------------------------------------------- hierarchy JSON

HierarchySpec parse_hierarchy_json(const std::string& text, const std::vector<std::string>& bottom_ids,
                                   std::string label) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MetadataError(std::string("invalid hierarchy JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw MetadataError("hierarchy JSON must be an object of arrays");
    }
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < bottom_ids.size(); ++i) {
        index.emplace(bottom_ids[i], static_cast<int>(i));
    }
    const auto m = static_cast<Eigen::Index>(bottom_ids.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(j.size()), m);
    std::vector<std::string> middle_ids;
    Eigen::Index r = 0;
    for (const auto& item : j.items()) {
        const auto& members = item.value();
        if (!members.is_array()) {
            throw MetadataError("members of '" + item.key() + "' must be an array");
        }
        if (members.empty()) {
            throw MetadataError("middle series '" + item.key() + "' has no members");
        }
        for (const auto& mem : members) {
            if (!mem.is_string()) {
                throw MetadataError("member ids of '" + item.key() + "' must be strings");
            }
            auto it = index.find(mem.get<std::string>());
            if (it == index.end()) {
                throw MetadataError("middle series '" + item.key() + "' references unknown bottom id '" +
                                    mem.get<std::string>() + "'");
            }
            if (c(r, it->second) != 0.0) {
                throw MetadataError("middle series '" + item.key() + "' lists '" + it->first + "' twice");
            }
            c(r, it->second) = 1.0;
        }
        middle_ids.push_back(item.key());
        ++r;
    }
    try {
        if (c.rows() == 0) {
            return HierarchySpec{Grouping(static_cast<int>(m)), std::move(label)};
        }
        return HierarchySpec{Grouping(std::move(c), std::move(middle_ids)), std::move(label)};
    } catch (const ArgumentError& e) {
        throw MetadataError(e.what());
    }
}

HierarchySpec read_natural_hierarchy(const std::filesystem::path& path, const SeriesPanel& panel) {
    std::ifstream in(path);
    if (!in) {
        throw MetadataError("cannot open hierarchy file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_hierarchy_json(ss.str(), panel.bottom_ids(), "Natural");
}

std::string hierarchy_json(const Grouping& g, const std::vector<std::string>& bottom_ids) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (int r = 0; r < g.rows(); ++r) {
        auto arr = nlohmann::ordered_json::array();
        for (int b : g.members(r)) {
            arr.push_back(bottom_ids[static_cast<size_t>(b)]);
        }
        j[g.middle_ids()[static_cast<size_t>(r)]] = std::move(arr);
    }
    return j.dump(2);
}

} // namespace hts
