#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "riskshare/panel.hpp"

namespace fixtures {

/// Scratch directory that cleans up after itself.
class TempDir {
  public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("riskshare_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string path() const { return path_.string(); }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

/// Tiny deterministic positive panel: 2 units x 4 years x 5 variables.
inline riskshare::PanelDataset tiny_accounts_panel() {
    riskshare::PanelDataset p;
    p.units = {"AA", "BB"};
    p.years = {1995, 1996, 1997, 1998};
    auto mat = [](std::initializer_list<double> v) {
        Eigen::MatrixXd m(2, 4);
        int i = 0;
        for (double x : v) {
            m(i / 4, i % 4) = x;
            ++i;
        }
        return m;
    };
    p.variables["GDP"] = mat({100, 104, 103, 108, 95, 96, 99, 101});
    p.variables["NI"] = mat({92, 95, 94, 99, 88, 90, 91, 93});
    p.variables["DNI"] = mat({80, 83, 82, 86, 76, 78, 79, 81});
    p.variables["G"] = mat({20, 21, 22, 21, 18, 19, 19, 20});
    p.variables["C"] = mat({60, 62, 61, 64, 57, 58, 60, 61});
    p.source = "simulated";
    return p;
}

}  // namespace fixtures
