// Writes the deterministic toy fixture: a POS-tagged vertical corpus with
// latent topics, 50-dim embeddings, two similarity test sets and a config.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "xvec/util.hpp"

namespace fs = std::filesystem;
using xvec::Rng;

namespace {

constexpr std::size_t kTopics = 12;
constexpr std::size_t kDim = 50;

struct Word {
    std::string lemma;
    char pos;  // N V J R
    std::size_t topic;  // kTopics = general
    double weight;
    std::vector<double> latent;
};

std::string make_lemma(Rng& rng, std::size_t len) {
    static const std::string cons = "bdfgklmnprstvz";
    static const std::string vow = "aeiou";
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
        s += cons[rng.below(cons.size())];
        s += vow[rng.below(vow.size())];
    }
    return s;
}

std::string tag_for(char pos, Rng& rng) {
    switch (pos) {
        case 'N': return rng.uniform() < 0.3 ? "NNS" : "NN";
        case 'V': return rng.uniform() < 0.5 ? "VBD" : "VBZ";
        case 'J': return "JJ";
        default: return "RB";
    }
}

std::string surface_for(const std::string& lemma, const std::string& tag) {
    if (tag == "NNS" || tag == "VBZ") return lemma + "s";
    if (tag == "VBD") return lemma + "d";
    if (tag == "RB") return lemma + "ly";
    return lemma;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double cos_sim(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
    return d / (norm(a) * norm(b));
}

std::size_t pick(const std::vector<std::size_t>& ids, const std::vector<double>& cum, Rng& rng) {
    const double u = rng.uniform() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    return ids[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), ids.size() - 1)];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the toy fixture"};
    fs::path out_dir = "fixtures";
    std::size_t tokens = 300000;
    std::uint64_t seed = 7;
    app.add_option("--out", out_dir);
    app.add_option("--tokens", tokens);
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    Rng rng(seed);
    fs::create_directories(out_dir);

    std::vector<std::vector<double>> centers(kTopics + 1, std::vector<double>(kDim));
    for (auto& c : centers)
        for (auto& x : c) x = rng.uniform(-1, 1);

    const std::vector<std::pair<char, std::size_t>> classes = {{'N', 420}, {'V', 220}, {'J', 220}, {'R', 110}};
    std::vector<Word> words;
    std::set<std::string> used = {"the", "of", "and", "a", "in"};
    for (const auto& [pos, n] : classes) {
        for (std::size_t i = 0; i < n; ++i) {
            std::string lemma;
            do lemma = make_lemma(rng, 2 + rng.below(2));
            while (!used.insert(lemma).second);
            Word w{lemma, pos, rng.uniform() < 0.2 ? kTopics : rng.below(kTopics),
                   1.0 / std::pow(static_cast<double>(i + 1), 0.9), {}};
            w.latent = centers[w.topic];
            for (auto& x : w.latent) x += rng.uniform(-0.6, 0.6);
            words.push_back(std::move(w));
        }
    }

    // Per (topic, pos) cumulative sampling tables; topic kTopics holds general words.
    std::map<std::pair<std::size_t, char>, std::pair<std::vector<std::size_t>, std::vector<double>>> tables;
    for (std::size_t i = 0; i < words.size(); ++i) {
        auto& [ids, cum] = tables[{words[i].topic, words[i].pos}];
        ids.push_back(i);
        cum.push_back((cum.empty() ? 0.0 : cum.back()) + words[i].weight);
    }
    const std::vector<std::string> function_words = {"the", "of", "and", "a", "in"};
    const std::vector<std::string> function_tags = {"DT", "IN", "CC", "DT", "IN"};

    {
        std::ofstream corpus(out_dir / "toy_corpus.vert");
        std::size_t written = 0, doc = 0;
        while (written < tokens) {
            corpus << "<text id=\"d" << doc++ << "\">\n";
            const std::size_t topic = rng.below(kTopics);
            const std::size_t n_sent = 3 + rng.below(5);
            for (std::size_t s = 0; s < n_sent; ++s) {
                corpus << "<s>\n";
                const std::size_t len = 6 + rng.below(14);
                for (std::size_t k = 0; k < len; ++k) {
                    const double u = rng.uniform();
                    if (u < 0.15) {
                        const std::size_t f = rng.below(function_words.size());
                        corpus << function_words[f] << '\t' << function_words[f] << '\t' << function_tags[f] << '\n';
                        continue;
                    }
                    const double p = rng.uniform();
                    const char pos = p < 0.45 ? 'N' : p < 0.7 ? 'V' : p < 0.9 ? 'J' : 'R';
                    const std::size_t t = rng.uniform() < 0.7 ? topic : kTopics;
                    auto it = tables.find({t, pos});
                    if (it == tables.end()) it = tables.find({kTopics, pos});
                    const auto& w = words[pick(it->second.first, it->second.second, rng)];
                    const auto tag = tag_for(w.pos, rng);
                    corpus << surface_for(w.lemma, tag) << '\t' << w.lemma << '\t' << tag << '\n';
                }
                corpus << ".\t.\tSENT\n</s>\n";
                written += len + 1;
            }
            corpus << "</text>\n";
        }
    }

    {
        // Embeddings: latent topic vector plus a shared direction; a
        // word-specific number of components is pushed below 0.01.
        std::ofstream emb(out_dir / "toy_embeddings.txt");
        emb << words.size() << ' ' << kDim << '\n';
        std::vector<double> shared(kDim);
        for (auto& x : shared) x = rng.uniform(0.5, 1.0);
        for (const auto& w : words) {
            std::vector<double> v(kDim);
            for (std::size_t d = 0; d < kDim; ++d) v[d] = 0.08 * (w.latent[d] + 2.0 * shared[d]);
            const std::size_t zeros = rng.uniform() < 0.25 ? rng.below(40) : rng.below(6);
            for (std::size_t z = 0; z < zeros; ++z) v[rng.below(kDim)] = rng.uniform(-0.009, 0.009);
            emb << w.lemma;
            for (double x : v) emb << ' ' << xvec::format_sig(x, 6);
            emb << '\n';
        }
    }

    const auto write_testset = [&](const std::string& name, std::size_t n_pairs, std::size_t pool) {
        std::ofstream ts(out_dir / name);
        ts << "word1\tword2\tscore\n";
        std::set<std::pair<std::size_t, std::size_t>> seen;
        // Most frequent words of every class first, so coverage is high.
        std::vector<std::size_t> ids;
        std::size_t offset = 0;
        for (const auto& [pos, n] : classes) {
            for (std::size_t i = 0; i < std::min(n, pool); ++i) ids.push_back(offset + i);
            offset += n;
        }
        while (seen.size() < n_pairs) {
            std::size_t a = ids[rng.below(ids.size())], b = ids[rng.below(ids.size())];
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (!seen.insert({a, b}).second) continue;
            const double score = 5.0 * (1.0 + cos_sim(words[a].latent, words[b].latent));
            ts << words[a].lemma << '\t' << words[b].lemma << '\t' << xvec::format_sig(score, 4) << '\n';
        }
    };
    write_testset("men_toy.tsv", 300, 60);
    write_testset("rg_toy.tsv", 65, 25);

    std::cout << "fixture written to " << out_dir.string() << '\n';
    return 0;
}
