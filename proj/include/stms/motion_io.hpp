#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stms/errors.hpp"
#include "stms/motion.hpp"

namespace stms {

// Canonical motion file:
//   line 1:  J=<int> D=<int> RATE=<float>
//   line 2+: J*D space-separated decimals, one frame per line
// UTF-8, LF line endings, 6 decimal places on save.

namespace detail {

inline std::int64_t parse_header_int(const std::string& token, const std::string& name,
                                     const std::string& source) {
    if (token.rfind(name + "=", 0) != 0)
        throw ParseError(source + ":1: malformed header, expected '" + name + "=<value>', got '" +
                         token + "'");
    const std::string value = token.substr(name.size() + 1);
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source + ":1: header field " + name + " is not an integer: '" + value +
                         "'");
    }
}

inline double parse_header_double(const std::string& token, const std::string& name,
                                  const std::string& source) {
    if (token.rfind(name + "=", 0) != 0)
        throw ParseError(source + ":1: malformed header, expected '" + name + "=<value>', got '" +
                         token + "'");
    const std::string value = token.substr(name.size() + 1);
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source + ":1: header field " + name + " is not a number: '" + value +
                         "'");
    }
}

}  // namespace detail

// Loads a canonical motion file. `joint_subset`, when given, keeps only the
// listed joints (0-based indices into the file's joint order).
inline MotionSequence load_canonical(const std::string& path,
                                     const std::vector<Index>& joint_subset = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open motion file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header line");
    std::istringstream header(line);
    std::string tok_j, tok_d, tok_rate, extra;
    if (!(header >> tok_j >> tok_d >> tok_rate))
        throw ParseError(path + ":1: malformed header, expected 'J=<int> D=<int> RATE=<float>'");
    if (header >> extra)
        throw ParseError(path + ":1: unexpected trailing token '" + extra + "' in header");

    const Index joints = static_cast<Index>(detail::parse_header_int(tok_j, "J", path));
    const Index dims = static_cast<Index>(detail::parse_header_int(tok_d, "D", path));
    const double rate = detail::parse_header_double(tok_rate, "RATE", path);
    if (joints < 1) throw ParseError(path + ":1: J must be positive");
    if (dims != 2 && dims != 3) throw ParseError(path + ":1: D must be 2 or 3");
    if (!(rate > 0.0)) throw ParseError(path + ":1: RATE must be positive");

    const Index cols = joints * dims;
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<double> values;
        std::string token;
        while (ls >> token) {
            try {
                std::size_t pos = 0;
                values.push_back(std::stod(token, &pos));
                if (pos != token.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": non-numeric token '" + token + "'");
            }
        }
        if (values.empty()) continue;  // blank line
        if (static_cast<Index>(values.size()) != cols)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(cols) + " values, got " +
                             std::to_string(values.size()));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw InvalidInputError(path + ": no frames after header");

    Matrix<double> flat(static_cast<Index>(rows.size()), cols);
    for (Index t = 0; t < flat.rows(); ++t)
        for (Index c = 0; c < cols; ++c) flat(t, c) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];

    if (joint_subset.empty()) return MotionSequence::from_flat(flat, joints, dims, rate);

    for (const Index j : joint_subset)
        if (j < 0 || j >= joints)
            throw InvalidInputError(path + ": joint subset index " + std::to_string(j) +
                                    " outside [0, " + std::to_string(joints) + ")");
    Matrix<double> kept(flat.rows(), static_cast<Index>(joint_subset.size()) * dims);
    for (Index t = 0; t < flat.rows(); ++t)
        for (std::size_t k = 0; k < joint_subset.size(); ++k)
            for (Index d = 0; d < dims; ++d)
                kept(t, static_cast<Index>(k) * dims + d) = flat(t, joint_subset[k] * dims + d);
    return MotionSequence::from_flat(kept, static_cast<Index>(joint_subset.size()), dims, rate);
}

inline void save_canonical(const MotionSequence& seq, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF on every platform
    if (!out) throw IoError("cannot open file for writing: " + path);

    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", seq.frame_rate_hz());
    out << "J=" << seq.joint_count() << " D=" << seq.dims() << " RATE=" << buf << "\n";

    const Matrix<double> flat = seq.flat();
    for (Index t = 0; t < flat.rows(); ++t) {
        for (Index c = 0; c < flat.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.6f", flat(t, c));
            if (c) out << ' ';
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace stms
