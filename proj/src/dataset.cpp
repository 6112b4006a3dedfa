#include "gocart/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gocart/errors.hpp"

namespace gocart {

Dataset Dataset::with_shape(std::size_t n, std::size_t d, std::size_t p) {
    Dataset data;
    data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    data.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    return data;
}

Moments sample_moments(const Matrix& y, std::span<const std::size_t> idx) {
    Moments m;
    const auto p = y.cols();
    m.count = idx.size();
    m.mean = Vector::Zero(p);
    m.cov = Matrix::Zero(p, p);
    if (idx.empty()) return m;
    for (auto i : idx) m.mean += y.row(static_cast<Eigen::Index>(i)).transpose();
    m.mean /= static_cast<double>(idx.size());
    m.cov = second_moment_about(y, idx, m.mean);
    return m;
}

Matrix second_moment_about(const Matrix& y, std::span<const std::size_t> idx, const Vector& centre) {
    const auto p = y.cols();
    Matrix centred(static_cast<Eigen::Index>(idx.size()), p);
    for (std::size_t r = 0; r < idx.size(); ++r)
        centred.row(static_cast<Eigen::Index>(r)) = y.row(static_cast<Eigen::Index>(idx[r])) - centre.transpose();
    Matrix out = Matrix::Zero(p, p);
    if (idx.empty()) return out;
    out.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose());
    out = out.selfadjointView<Eigen::Lower>();
    return out / static_cast<double>(idx.size());
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

namespace {

void append_number(std::string& out, double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

void write_csv(const Dataset& data, const std::string& path) {
    std::string out;
    const auto d = data.dim_x(), p = data.dim_y();
    for (std::size_t k = 0; k < d; ++k) out += (k ? ",x" : "x") + std::to_string(k + 1);
    for (std::size_t j = 0; j < p; ++j) out += (d + j ? ",y" : "y") + std::to_string(j + 1);
    out += '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t k = 0; k < d; ++k) {
            if (k) out += ',';
            append_number(out, data.x(r, static_cast<Eigen::Index>(k)));
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (d + j) out += ',';
            append_number(out, data.y(r, static_cast<Eigen::Index>(j)));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Schema, path + ": missing header");
    const auto header = split_fields(line);

    std::size_t d = 0, p = 0;
    std::vector<std::string> offending;
    for (const auto& name : header) {
        if (p == 0 && name == "x" + std::to_string(d + 1)) {
            ++d;
        } else if (name == "y" + std::to_string(p + 1)) {
            ++p;
        } else {
            offending.push_back(name.empty() ? "<empty>" : name);
        }
    }
    if (!offending.empty() || d == 0 || p == 0) {
        std::string msg = path + ": header must be x1..xd,y1..yp";
        if (!offending.empty()) {
            msg += "; offending columns:";
            for (const auto& o : offending) msg += " " + o;
        }
        throw Error(ErrorKind::Schema, msg);
    }

    std::vector<double> values;
    std::size_t rows = 0, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != d + p)
            throw Error(ErrorKind::Schema, path + ":" + std::to_string(line_no) + ": expected " +
                                               std::to_string(d + p) + " fields, got " +
                                               std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const char* begin = fields[c].c_str();
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            if (end == begin || *end != '\0' || errno == ERANGE)
                throw Error(ErrorKind::Schema, path + ":" + std::to_string(line_no) + ": column " + header[c] +
                                                   " is not a number: '" + fields[c] + "'");
            values.push_back(v);
        }
        ++rows;
    }

    Dataset data = Dataset::with_shape(rows, d, p);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t k = 0; k < d; ++k) data.x(r, static_cast<Eigen::Index>(k)) = values[i * (d + p) + k];
        for (std::size_t j = 0; j < p; ++j) data.y(r, static_cast<Eigen::Index>(j)) = values[i * (d + p) + d + j];
    }
    return data;
}

MinMaxScaler MinMaxScaler::fit(const Dataset& data) {
    if (data.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit a covariate scaler on no rows");
    MinMaxScaler s;
    for (std::size_t k = 0; k < data.dim_x(); ++k) {
        const auto col = data.x.col(static_cast<Eigen::Index>(k));
        s.min.push_back(col.minCoeff());
        s.max.push_back(col.maxCoeff());
    }
    return s;
}

std::vector<double> MinMaxScaler::apply(std::span<const double> raw) const {
    if (raw.size() != min.size()) throw Error(ErrorKind::DimensionMismatch, "scaler dimension mismatch");
    std::vector<double> out(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double range = max[k] - min[k];
        const double u = range > 0.0 ? (raw[k] - min[k]) / range : 0.0;
        out[k] = std::clamp(u, 0.0, 1.0);
    }
    return out;
}

std::vector<double> MinMaxScaler::invert(std::span<const double> unit) const {
    if (unit.size() != min.size()) throw Error(ErrorKind::DimensionMismatch, "scaler dimension mismatch");
    std::vector<double> out(unit.size());
    for (std::size_t k = 0; k < unit.size(); ++k) out[k] = min[k] + unit[k] * (max[k] - min[k]);
    return out;
}

void MinMaxScaler::transform(Dataset& data) const {
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto scaled = apply(data.covariates(i));
        for (std::size_t k = 0; k < scaled.size(); ++k)
            data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = scaled[k];
    }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << contents;
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gocart
