#pragma once

// Tabular dataset with typed numeric attributes, per-cell missingness and a
// nominal class column, plus CSV ingestion and grow/prune splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ripsel/error.hpp"
#include "ripsel/log.hpp"
#include "ripsel/util.hpp"

namespace ripsel {

using Cell = std::optional<double>;

enum class AttributeKind { continuous, categorical_numeric };

inline const char* to_string(AttributeKind kind) {
    return kind == AttributeKind::continuous ? "continuous" : "categorical";
}

struct AttributeSpec {
    std::string name;
    AttributeKind kind = AttributeKind::continuous;
    std::size_t index = 0;

    bool operator==(const AttributeSpec&) const = default;
};

class Dataset {
public:
    Dataset() = default;

    /// `cells` is row-major, rows() x schema.size().
    Dataset(std::vector<AttributeSpec> schema, std::vector<std::string> class_labels,
            std::vector<Cell> cells, std::vector<std::size_t> classes,
            std::string class_name = "class")
        : schema_(std::move(schema)), class_labels_(std::move(class_labels)),
          cells_(std::move(cells)), classes_(std::move(classes)),
          class_name_(std::move(class_name)) {
        validate();
    }

    std::size_t rows() const noexcept { return classes_.size(); }
    std::size_t cols() const noexcept { return schema_.size(); }
    bool empty() const noexcept { return classes_.empty(); }

    const std::vector<AttributeSpec>& schema() const noexcept { return schema_; }
    const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
    std::size_t num_classes() const noexcept { return class_labels_.size(); }
    const std::string& class_name() const noexcept { return class_name_; }

    const Cell& cell(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }
    std::span<const Cell> row(std::size_t r) const { return {cells_.data() + r * cols(), cols()}; }
    const std::vector<Cell>& cells() const noexcept { return cells_; }
    std::size_t class_of(std::size_t row) const { return classes_[row]; }
    const std::vector<std::size_t>& classes() const noexcept { return classes_; }

    std::size_t count_missing() const {
        return static_cast<std::size_t>(
            std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return !c; }));
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(num_classes(), 0);
        for (auto c : classes_)
            ++counts[c];
        return counts;
    }

    std::optional<std::size_t> find_attribute(std::string_view name) const {
        for (const auto& a : schema_)
            if (a.name == name)
                return a.index;
        return std::nullopt;
    }

    Dataset subset(std::span<const std::size_t> row_ids) const {
        std::vector<Cell> cells;
        cells.reserve(row_ids.size() * cols());
        std::vector<std::size_t> classes;
        classes.reserve(row_ids.size());
        for (auto r : row_ids) {
            auto src = row(r);
            cells.insert(cells.end(), src.begin(), src.end());
            classes.push_back(classes_[r]);
        }
        return {schema_, class_labels_, std::move(cells), std::move(classes), class_name_};
    }

    /// Keeps the listed attribute columns (in the given order) and re-indexes the schema.
    Dataset select_columns(std::span<const std::size_t> col_ids) const {
        std::vector<AttributeSpec> schema;
        for (std::size_t k = 0; k < col_ids.size(); ++k) {
            if (col_ids[k] >= cols())
                throw SchemaError("column index " + std::to_string(col_ids[k]) + " out of range");
            schema.push_back(schema_[col_ids[k]]);
            schema.back().index = k;
        }
        std::vector<Cell> cells;
        cells.reserve(rows() * col_ids.size());
        for (std::size_t r = 0; r < rows(); ++r)
            for (auto c : col_ids)
                cells.push_back(cell(r, c));
        return {std::move(schema), class_labels_, std::move(cells), classes_, class_name_};
    }

    /// Same schema and labels, different cell contents.
    Dataset with_cells(std::vector<Cell> cells) const {
        return {schema_, class_labels_, std::move(cells), classes_, class_name_};
    }

    /// Re-expresses class indices in the reference label order; attribute names must match.
    Dataset aligned_to(const std::vector<AttributeSpec>& schema, const std::vector<std::string>& labels,
                       const std::string& class_name) const {
        if (schema_.size() != schema.size())
            throw SchemaError("attribute count mismatch: " + std::to_string(cols()) + " vs " +
                              std::to_string(schema.size()));
        for (std::size_t j = 0; j < cols(); ++j)
            if (schema_[j].name != schema[j].name)
                throw SchemaError("attribute " + std::to_string(j) + " is '" + schema_[j].name +
                                  "', expected '" + schema[j].name + "'");
        std::vector<std::size_t> remap(num_classes());
        for (std::size_t c = 0; c < num_classes(); ++c) {
            auto it = std::find(labels.begin(), labels.end(), class_labels_[c]);
            if (it == labels.end())
                throw DataError("class label '" + class_labels_[c] + "' unknown to the model");
            remap[c] = static_cast<std::size_t>(it - labels.begin());
        }
        std::vector<std::size_t> classes(classes_.size());
        for (std::size_t r = 0; r < classes_.size(); ++r)
            classes[r] = remap[classes_[r]];
        return {schema, labels, cells_, std::move(classes), class_name};
    }

    Dataset aligned_to(const Dataset& reference) const {
        return aligned_to(reference.schema_, reference.class_labels_, reference.class_name_);
    }

    bool operator==(const Dataset&) const = default;

private:
    void validate() const {
        std::unordered_set<std::string> names;
        for (std::size_t j = 0; j < schema_.size(); ++j) {
            if (schema_[j].index != j)
                throw SchemaError("attribute indices must be contiguous from 0");
            if (!names.insert(schema_[j].name).second)
                throw SchemaError("duplicate attribute name '" + schema_[j].name + "'");
        }
        if (class_labels_.size() < 2)
            throw DataError("need >=2 classes, found " + std::to_string(class_labels_.size()));
        if (cells_.size() != classes_.size() * schema_.size())
            throw SchemaError("cell count does not match rows x attributes");
        for (auto c : classes_)
            if (c >= class_labels_.size())
                throw DataError("class index out of range");
    }

    std::vector<AttributeSpec> schema_;
    std::vector<std::string> class_labels_;
    std::vector<Cell> cells_;
    std::vector<std::size_t> classes_;
    std::string class_name_ = "class";
};

struct CsvOptions {
    char delimiter = ',';
    std::string missing_marker = "?";
    std::string class_column;
    std::vector<std::string> drop_columns;
    std::vector<std::string> categorical_columns;
    /// Fixes the class index order; labels not listed are appended in first-appearance order.
    std::vector<std::string> class_labels;
    std::optional<std::size_t> max_rows;
    std::size_t skip_rows = 0;
};

namespace detail {

inline std::vector<std::string_view> split_line(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

} // namespace detail

inline Dataset read_csv(std::istream& in, const CsvOptions& opt) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!trim(line).empty())
                return true;
        }
        return false;
    };
    if (!next_line())
        throw ParseError("missing header row", line_no);

    auto header = detail::split_line(line, opt.delimiter);
    std::optional<std::size_t> class_col;
    std::unordered_set<std::string> drop(opt.drop_columns.begin(), opt.drop_columns.end());
    std::unordered_set<std::string> categorical(opt.categorical_columns.begin(),
                                                opt.categorical_columns.end());
    std::vector<std::size_t> feature_cols;
    std::vector<AttributeSpec> schema;
    // No class column named: the last header column.
    const std::string class_name =
        opt.class_column.empty() ? std::string(trim(header.back())) : opt.class_column;
    for (std::size_t j = 0; j < header.size(); ++j) {
        std::string name(header[j]);
        if (name == class_name) {
            class_col = j;
            continue;
        }
        if (drop.count(name))
            continue;
        schema.push_back({name,
                          categorical.count(name) ? AttributeKind::categorical_numeric
                                                  : AttributeKind::continuous,
                          schema.size()});
        feature_cols.push_back(j);
    }
    if (!class_col)
        throw ConfigError("class column '" + class_name + "' not found in header");
    for (const auto& d : opt.drop_columns)
        if (std::find(header.begin(), header.end(), d) == header.end())
            throw ConfigError("drop column '" + d + "' not found in header");
    for (const auto& c : opt.categorical_columns)
        if (std::find(header.begin(), header.end(), c) == header.end())
            throw ConfigError("categorical column '" + c + "' not found in header");

    std::vector<std::string> labels = opt.class_labels;
    std::unordered_map<std::string, std::size_t> label_index;
    for (std::size_t c = 0; c < labels.size(); ++c)
        label_index.emplace(labels[c], c);

    std::vector<Cell> cells;
    std::vector<std::size_t> classes;
    std::size_t data_row = 0;
    while (next_line()) {
        auto fields = detail::split_line(line, opt.delimiter);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        if (data_row++ < opt.skip_rows)
            continue;
        if (opt.max_rows && classes.size() >= *opt.max_rows)
            break;
        std::string label(fields[*class_col]);
        if (label == opt.missing_marker || label.empty())
            throw ParseError("class value is missing", line_no);
        auto [it, inserted] = label_index.emplace(label, labels.size());
        if (inserted)
            labels.push_back(label);
        classes.push_back(it->second);
        for (auto j : feature_cols) {
            auto f = fields[j];
            if (f == opt.missing_marker) {
                cells.emplace_back();
                continue;
            }
            auto v = parse_double(f);
            if (!v)
                throw ParseError("non-numeric value '" + std::string(f) + "' in column '" +
                                     std::string(header[j]) + "'",
                                 line_no);
            cells.emplace_back(*v);
        }
    }
    std::vector<std::size_t> seen(labels.size(), 0);
    for (auto c : classes)
        seen[c] = 1;
    if (std::accumulate(seen.begin(), seen.end(), std::size_t{0}) < 2)
        throw DataError("need >=2 classes in column '" + class_name + "'");
    return {std::move(schema), std::move(labels), std::move(cells), std::move(classes),
            class_name};
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    try {
        return read_csv(in, opt);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line());
    }
}

/// Writes features then the class column; missing cells use `missing_marker`.
inline void write_csv(std::ostream& out, const Dataset& data, char delimiter = ',',
                      const std::string& missing_marker = "?") {
    for (const auto& a : data.schema())
        out << a.name << delimiter;
    out << data.class_name() << '\n';
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const auto& c = data.cell(r, j);
            out << (c ? format_double(*c) : missing_marker) << delimiter;
        }
        out << data.class_labels()[data.class_of(r)] << '\n';
    }
}

inline void save_csv(const std::string& path, const Dataset& data, char delimiter = ',',
                     const std::string& missing_marker = "?") {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    write_csv(out, data, delimiter, missing_marker);
    if (!out)
        throw DataError("write failed for '" + path + "'");
}

struct SplitPair {
    Dataset grow;
    Dataset prune;
};

struct IndexSplit {
    std::vector<std::size_t> grow;
    std::vector<std::size_t> prune;
};

/// Splits `ids` into grow/prune with |grow| = round(ratio * n). When `labels` is given the
/// split is stratified per label with largest-remainder allocation.
inline IndexSplit split_indices(std::span<const std::size_t> ids,
                                std::span<const std::size_t> labels, std::size_t num_labels,
                                double ratio, std::uint64_t seed, bool stratify = true) {
    const std::size_t n = ids.size();
    const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    std::mt19937_64 rng(seed);
    std::vector<char> in_grow(n, 0);

    std::vector<std::vector<std::size_t>> by_label;
    if (stratify && !labels.empty()) {
        by_label.resize(num_labels);
        for (std::size_t k = 0; k < n; ++k)
            by_label[labels[k]].push_back(k);
        for (const auto& members : by_label)
            if (members.size() == 1) {
                warn("a class has fewer than 2 instances; grow/prune split is unstratified");
                by_label.clear();
                break;
            }
    }

    if (by_label.empty()) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 0; k < target; ++k)
            in_grow[order[k]] = 1;
    } else {
        std::vector<std::size_t> quota(by_label.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < by_label.size(); ++c) {
            double ideal = ratio * static_cast<double>(by_label[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(ideal));
            assigned += quota[c];
            remainders.emplace_back(ideal - std::floor(ideal), c);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k, ++assigned)
            ++quota[remainders[k].second];
        for (std::size_t c = 0; c < by_label.size(); ++c) {
            auto members = by_label[c];
            std::shuffle(members.begin(), members.end(), rng);
            for (std::size_t k = 0; k < quota[c]; ++k)
                in_grow[members[k]] = 1;
        }
    }

    IndexSplit out;
    for (std::size_t k = 0; k < n; ++k)
        (in_grow[k] ? out.grow : out.prune).push_back(ids[k]);
    return out;
}

inline SplitPair split_grow_prune(const Dataset& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ConfigError("grow ratio must lie in (0, 1)");
    if (data.empty())
        throw DataError("cannot split an empty dataset");
    std::vector<std::size_t> ids(data.rows());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    auto split = split_indices(ids, data.classes(), data.num_classes(), ratio, seed);
    return {data.subset(split.grow), data.subset(split.prune)};
}

/// Class indices from least to most prevalent; ties go to the lower index.
inline std::vector<std::size_t> class_prevalence_order(std::span<const std::size_t> counts) {
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });
    return order;
}

inline std::vector<std::size_t> class_prevalence_order(const Dataset& data) {
    if (data.empty())
        throw DataError("cannot order classes of an empty dataset");
    auto counts = data.class_counts();
    return class_prevalence_order(counts);
}

} // namespace ripsel
