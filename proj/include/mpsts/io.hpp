// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpsts/errors.hpp"
#include "mpsts/sampling.hpp"

namespace mpsts {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::json meta_to_json(const DatasetMeta& meta) {
    return nlohmann::json{{"true_params", {{"mu", meta.true_params.mu}, {"a", meta.true_params.a}}},
                          {"eta", meta.eta},
                          {"gamma_t", meta.gamma_t},
                          {"seed", meta.seed},
                          {"sample_count", meta.sample_count},
                          {"rng", meta.rng}};
}

inline DatasetMeta meta_from_json(const nlohmann::json& j) {
    DatasetMeta meta;
    meta.true_params.mu = j.at("true_params").at("mu").get<double>();
    meta.true_params.a = j.at("true_params").at("a").get<double>();
    meta.eta = j.at("eta").get<double>();
    meta.gamma_t = j.at("gamma_t").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.sample_count = j.at("sample_count").get<std::uint64_t>();
    meta.rng = j.at("rng").get<std::string>();
    return meta;
}

// Dataset file layout: a one-line JSON metadata comment, a header row, then
// one full-precision quadrature value per line.
//
//   # {"true_params":{"mu":4,"a":3},"eta":0.78,...}
//   q
//   -0.70310926413304715
//   1.3047819446334399
//   ...
inline void write_dataset(const HomodyneDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(bool(out), errc::io_failure, "cannot open " + path.string() + " for writing");
    out << "# " << meta_to_json(ds.meta).dump() << "\n";
    out << "q\n";
    for (double v : ds.samples) out << format_double(v) << "\n";
    out.flush();
    require(out.good(), errc::io_failure, "write failed for " + path.string());
}

inline HomodyneDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(bool(in), errc::io_failure, "cannot open " + path.string());
    std::string line;
    require(bool(std::getline(in, line)) && line.size() > 2 && line[0] == '#', errc::io_failure,
            "missing metadata line in " + path.string());
    HomodyneDataset ds;
    try {
        ds.meta = meta_from_json(nlohmann::json::parse(line.substr(1)));
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::io_failure, "bad metadata in " + path.string() + ": " + e.what());
    }
    require(bool(std::getline(in, line)) && line == "q", errc::io_failure,
            "missing column header in " + path.string());
    ds.samples.reserve(ds.meta.sample_count);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &pos);
        } catch (const std::exception&) {
            throw error(errc::io_failure, "bad sample value in " + path.string() + ": " + line);
        }
        require(pos == line.size(), errc::io_failure,
                "trailing junk in sample line of " + path.string() + ": " + line);
        ds.samples.push_back(v);
    }
    require(ds.samples.size() == ds.meta.sample_count, errc::io_failure,
            "sample count mismatch in " + path.string() + ": metadata says " +
                std::to_string(ds.meta.sample_count) + ", file has " +
                std::to_string(ds.samples.size()));
    return ds;
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        require(bool(out_), errc::io_failure, "cannot open " + path.string() + " for writing");
        path_ = path.string();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ",";
            out_ << header[i];
        }
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ",";
            out_ << format_double(values[i]);
        }
        out_ << "\n";
    }

    void close() {
        out_.flush();
        require(out_.good(), errc::io_failure, "write failed for " + path_);
        out_.close();
    }

  private:
    std::ofstream out_;
    std::string path_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    require(bool(out), errc::io_failure, "cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    require(out.good(), errc::io_failure, "write failed for " + path.string());
}

}  // namespace mpsts
