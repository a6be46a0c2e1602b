#include "attfdir/csv.hpp"

#include "attfdir/error.hpp"

#include <cstdio>
#include <fstream>

namespace attfdir {

namespace {

const char* const kQuat[] = {"q0", "q1", "q2", "q3"};
const char* const kAxes[] = {"x", "y", "z"};
const char* const kEuler[] = {"phi", "theta", "psi"};

void append_number(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    line += ',';
    line += buf;
}

void append_int(std::string& line, long v) {
    line += ',';
    line += std::to_string(v);
}

std::vector<std::string> state_names(bool augmented) {
    std::vector<std::string> n{"q0", "q1", "q2", "q3", "wx", "wy", "wz"};
    if (augmented) {
        n.insert(n.end(), {"bx", "by", "bz"});
    }
    return n;
}

} // namespace

std::vector<std::string> csv_columns(const RunResult& result) {
    const bool euler = result.layout == MeasurementLayout::Euler9;
    std::vector<std::string> cols{"t"};
    for (const auto& n : state_names(false)) {
        cols.push_back(n);
    }
    if (euler) {
        cols.insert(cols.end(), {"phi", "theta", "psi"});
    }
    for (const char* sensor : {"st", "mm"}) {
        if (euler) {
            for (const char* a : kEuler) {
                cols.push_back(std::string("y_") + sensor + "_" + a);
            }
        } else {
            for (const char* c : kQuat) {
                cols.push_back(std::string("y_") + sensor + "_" + c);
            }
        }
    }
    for (const char* a : kAxes) {
        cols.push_back(std::string("y_gyro_") + a);
    }
    if (!result.has_filter()) {
        return cols;
    }
    for (const char* prefix : {"est_", "sig3_"}) {
        for (const auto& n : state_names(result.augmented)) {
            cols.push_back(prefix + n);
        }
    }
    cols.insert(cols.end(), {"nis", "detected", "isolated_mask"});
    return cols;
}

void write_csv(const RunResult& result, std::ostream& out) {
    const auto cols = csv_columns(result);
    std::string line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        line += (i ? "," : "") + cols[i];
    }
    out << line << '\n';

    for (const auto& s : result.steps) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g", s.t);
        line = buf;
        const Vector4 q = s.truth.q.vec();
        for (int i = 0; i < 4; ++i) {
            append_number(line, q[i]);
        }
        for (int i = 0; i < 3; ++i) {
            append_number(line, s.truth.omega[i]);
        }
        if (s.truth_euler) {
            append_number(line, s.truth_euler->phi);
            append_number(line, s.truth_euler->theta);
            append_number(line, s.truth_euler->psi);
        }
        for (Eigen::Index i = 0; i < s.measurement.size(); ++i) {
            append_number(line, s.measurement[i]);
        }
        if (result.has_filter()) {
            for (Eigen::Index i = 0; i < s.estimate.size(); ++i) {
                append_number(line, s.estimate[i]);
            }
            for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
                append_number(line, 3.0 * s.sigma[i]);
            }
            append_number(line, s.innovation ? s.innovation->nis : 0.0);
            append_int(line, s.report.detected ? 1 : 0);
            append_int(line, s.isolated_mask);
        }
        out << line << '\n';
    }
}

void export_csv(const RunResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    write_csv(result, out);
    out.flush();
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

} // namespace attfdir
