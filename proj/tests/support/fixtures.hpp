#ifndef HAABSA_TESTS_FIXTURES_HPP
#define HAABSA_TESTS_FIXTURES_HPP

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "haabsa/haabsa.hpp"

namespace fixtures {

inline std::string data_path(const std::string& relative) { return std::string(HAABSA_DATA_DIR) + "/" + relative; }

inline haabsa::Sentence sentence(const std::string& sid, const std::string& text, std::size_t start, std::size_t end,
                                 const std::string& category = "FOOD",
                                 haabsa::Polarity polarity = haabsa::Polarity::Positive) {
    haabsa::Sentence s;
    s.sid = sid;
    std::istringstream in(text);
    for (std::string w; in >> w;)
        s.tokens.push_back(w);
    s.target = {start, end};
    s.category = category;
    s.polarity = polarity;
    s.validate();
    return s;
}

inline std::vector<std::string> words(std::size_t n, const std::string& stem) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(stem + std::to_string(i));
    return out;
}

/// Split sentence with distinct tokens l0.., t0.., r0...
inline haabsa::SplitSentence split(std::size_t l, std::size_t t, std::size_t r, const std::string& sid = "x") {
    haabsa::SplitSentence s;
    s.sid = sid;
    s.left = words(l, "l");
    s.target = words(t, "t");
    s.right = words(r, "r");
    return s;
}

/// Word store with a uniform[-1,1] vector for every token of `splits`.
inline std::shared_ptr<const haabsa::Embedder> random_embedder(const std::vector<haabsa::SplitSentence>& splits,
                                                                std::size_t dim, std::uint64_t seed) {
    auto store = std::make_shared<haabsa::NonContextualStore>(dim);
    haabsa::Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& s : splits)
        for (const auto& w : s.joined())
            if (!store->contains(w)) {
                haabsa::Tensor v(dim);
                for (double& x : v.values())
                    x = u(rng);
                store->insert(w, v);
            }
    return std::make_shared<const haabsa::Embedder>(haabsa::Embedder::noncontextual(store));
}

inline haabsa::ModelConfig config(std::size_t de, std::size_t d, std::size_t hops, int method) {
    haabsa::ModelConfig c;
    c.embedding_dim = de;
    c.hidden_dim = d;
    c.hops = hops;
    c.method = haabsa::hierarchy_method(method);
    return c;
}

/// Model with every parameter uniform on [-bound, bound].
inline haabsa::LcrRotModel random_model(const haabsa::ModelConfig& cfg, std::uint64_t seed, double bound = 1.0) {
    haabsa::LcrRotModel m(cfg);
    haabsa::init_uniform(m.parameters(), bound, seed);
    return m;
}

inline std::vector<double> values(const haabsa::Tensor& t) { return {t.values().begin(), t.values().end()}; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("haabsa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        std::ofstream(file(name)) << content;
        return file(name);
    }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty())
            out.push_back(l);
    return out;
}

} // namespace fixtures

#endif
