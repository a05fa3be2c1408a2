#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hts {

enum class Level { top, middle, bottom };

/// Aggregation matrix C (k x m) mapping bottom series to middle-level series.
///
/// Entries are 0/1, no row is all zeros and no two rows are equal. k = 0 is
/// the two-level hierarchy; the bottom count m is kept separately so an empty
/// grouping still knows its width.
class Grouping {
public:
    explicit Grouping(int m);
    Grouping(Eigen::MatrixXd c, std::vector<std::string> middle_ids = {});

    int m() const noexcept { return m_; }
    int rows() const noexcept { return static_cast<int>(c_.rows()); }
    const Eigen::MatrixXd& matrix() const noexcept { return c_; }
    const std::vector<std::string>& middle_ids() const noexcept { return ids_; }

    std::vector<int> members(int row) const;
    int row_sum(int row) const;
    // "0110..." bit string of a row; rows are equal iff keys are equal.
    std::string row_key(int row) const;

    friend bool operator==(const Grouping& a, const Grouping& b) {
        return a.m_ == b.m_ && a.c_ == b.c_;
    }

private:
    int m_ = 0;
    Eigen::MatrixXd c_;
    std::vector<std::string> ids_;
};

/// A grouping plus the implied top row and identity block.
struct HierarchySpec {
    Grouping grouping;
    std::string label;

    int m() const noexcept { return grouping.m(); }
    int k() const noexcept { return grouping.rows(); }
    int n() const noexcept { return 1 + k() + m(); }
};

/// S = [1_{1 x m}; C; I_m], shape (m+k+1) x m.
Eigen::MatrixXd summing_matrix(const Grouping& g);
inline Eigen::MatrixXd summing_matrix(const HierarchySpec& h) { return summing_matrix(h.grouping); }

/// Monthly period index: year * 12 + (month - 1).
int parse_year_month(const std::string& text);
std::string format_year_month(int period);

/// T x n panel of observations. Columns carry an id and a level tag; exactly
/// one column is tagged top. Periods are consecutive monthly indices.
class SeriesPanel {
public:
    SeriesPanel(Eigen::MatrixXd values, std::vector<std::string> ids, std::vector<int> periods,
                int seasonal_period, std::vector<Level> levels, bool synthetic_top = false);

    int length() const noexcept { return static_cast<int>(values_.rows()); }
    int size() const noexcept { return static_cast<int>(values_.cols()); }
    int bottom_count() const noexcept { return static_cast<int>(bottom_cols_.size()); }
    int seasonal_period() const noexcept { return s_; }
    bool synthetic_top() const noexcept { return synthetic_top_; }

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<int>& periods() const noexcept { return periods_; }
    const std::vector<Level>& levels() const noexcept { return levels_; }

    Eigen::MatrixXd bottom() const;
    std::vector<std::string> bottom_ids() const;
    Eigen::VectorXd top() const;
    int top_column() const noexcept { return top_col_; }

    // First `t` observations.
    SeriesPanel head(int t) const;

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> ids_;
    std::vector<int> periods_;
    int s_ = 1;
    std::vector<Level> levels_;
    bool synthetic_top_ = false;
    std::vector<int> bottom_cols_;
    int top_col_ = -1;
};

/// Builds a panel from bottom series only, appending a synthetic "Total" top.
SeriesPanel panel_from_bottom(const Eigen::MatrixXd& bottom, std::vector<std::string> ids,
                              int first_period, int seasonal_period);

/// Reads a wide CSV (`date,<id1>,...`). Without metadata every column is a
/// bottom series and a top is synthesised by summation. With hierarchy
/// metadata, columns named after its middle ids are tagged middle and a
/// column named `top_id` (if present) is tagged top.
SeriesPanel read_panel(const std::filesystem::path& path, int seasonal_period,
                       const std::optional<std::filesystem::path>& hierarchy = std::nullopt,
                       const std::string& top_id = "Total");
SeriesPanel read_panel(std::istream& in, int seasonal_period,
                       const std::vector<std::string>& middle_ids = {},
                       const std::string& top_id = "Total");

/// Writes the panel with 12 significant digits; a synthetic top is omitted.
void write_panel(const SeriesPanel& panel, std::ostream& out);
void write_panel(const SeriesPanel& panel, const std::filesystem::path& path);

/// JSON object `{"middle id": ["bottom id", ...], ...}`, rows in file order.
HierarchySpec read_natural_hierarchy(const std::filesystem::path& path, const SeriesPanel& panel);
HierarchySpec parse_hierarchy_json(const std::string& text, const std::vector<std::string>& bottom_ids,
                                   std::string label);
std::string hierarchy_json(const Grouping& g, const std::vector<std::string>& bottom_ids);

} // namespace hts
