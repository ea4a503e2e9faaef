#pragma once

#include "paneldml/panel.hpp"
#include "paneldml/rng.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

/// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("paneldml_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Row {
    std::string id;
    int year;
    std::vector<double> values;
};

inline paneldml::PanelDataset make_panel(const std::vector<std::string>& columns,
                                         const std::vector<Row>& rows) {
    paneldml::PanelDataset ds;
    for (const auto& c : columns) ds.add_column(c);
    for (const auto& r : rows) ds.append_row(r.id, r.year, r.values);
    return ds;
}

} // namespace testsupport
