#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinflow {

// Deterministic CSV writer: frozen column order, floats at 17 significant
// digits so re-runs are byte-stable.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path), n_cols_(columns.size()) {
        if (!out_) throw std::runtime_error("cannot open " + path);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
    }

    CsvWriter& field(const std::string& v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(long long v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(unsigned long v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(unsigned long long v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        sep();
        out_ << buf;
        return *this;
    }
    void endrow() {
        if (col_ != n_cols_) throw std::logic_error("CsvWriter: wrong number of fields in row");
        out_ << '\n';
        col_ = 0;
    }

  private:
    void sep() {
        if (col_) out_ << ',';
        ++col_;
    }
    std::ofstream out_;
    std::size_t n_cols_;
    std::size_t col_ = 0;
};

}  // namespace spinflow
