#pragma once

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>
#include <string>
#include <vector>

#include "xvec/matrix.hpp"

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("xvec_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Dense random non-negative matrix with roughly `density` non-zero cells.
inline xvec::SparseMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                        double density, bool integer) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> v(rows, std::vector<double>(cols, 0.0));
    for (auto& r : v)
        for (auto& x : r)
            if (u(gen) < density) x = integer ? static_cast<double>(1 + static_cast<int>(u(gen) * 20)) : u(gen) * 5.0;
    return xvec::from_dense(xvec::index_labels("r", rows), xvec::index_labels("c", cols), v);
}

}  // namespace testing
