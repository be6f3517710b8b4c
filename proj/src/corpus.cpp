#include "colorassoc/corpus.hpp"

#include "colorassoc/error.hpp"
#include "colorassoc/io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

namespace colorassoc {
namespace {

namespace fs = std::filesystem;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool accepted(const fs::path& p) {
    const std::string ext = lower(p.extension().string());
    return std::find(std::begin(kAcceptedExtensions), std::end(kAcceptedExtensions), ext) !=
           std::end(kAcceptedExtensions);
}

std::vector<fs::path> image_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && accepted(e.path())) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

std::vector<std::string> concept_dirs(const fs::path& root) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) {
            out.push_back(e.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::TopSearch: return "top_search";
        case Provenance::Photo: return "photo";
        case Provenance::Cartoon: return "cartoon";
        case Provenance::Custom: return "custom";
    }
    return "custom";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
    for (auto p : {Provenance::TopSearch, Provenance::Photo, Provenance::Cartoon, Provenance::Custom}) {
        if (provenance_name(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

std::vector<std::string> CorpusManifest::concepts() const {
    std::vector<std::string> out;
    for (const auto& r : records) {
        if (out.empty() || out.back() != r.concept_name) {
            out.push_back(r.concept_name);
        }
    }
    return out;
}

std::vector<const ImageRecord*> CorpusManifest::records_for(std::string_view concept_name) const {
    std::vector<const ImageRecord*> out;
    for (const auto& r : records) {
        if (r.concept_name == concept_name) {
            out.push_back(&r);
        }
    }
    return out;
}

CorpusManifest scan_corpus(const fs::path& root, const ScanOptions& options) {
    if (options.limit == 0) {
        throw InputError("image limit must be at least 1");
    }
    if (!fs::is_directory(root)) {
        throw IoError("corpus root is not a directory: " + root.string());
    }
    std::vector<std::string> concepts = options.concepts;
    if (concepts.empty()) {
        concepts = concept_dirs(root);
    } else {
        std::sort(concepts.begin(), concepts.end());
        if (std::adjacent_find(concepts.begin(), concepts.end()) != concepts.end()) {
            throw InputError("duplicate concept in concept list");
        }
    }
    if (concepts.empty()) {
        throw InputError("corpus has no concept directories: " + root.string());
    }

    CorpusManifest m;
    m.root = root;
    for (const auto& concept_name : concepts) {
        const fs::path dir = root / concept_name;
        if (!fs::is_directory(dir)) {
            throw InputError(fmt::format("concept '{}' has no directory under {}", concept_name, root.string()));
        }
        int rank = 0;
        for (const auto& file : image_files(dir)) {
            if (static_cast<std::size_t>(rank) >= options.limit) {
                break;
            }
            if (cv::imread(file.string(), cv::IMREAD_COLOR).empty()) {
                spdlog::warn("skipping undecodable image {}", file.string());
                ++m.skipped;
                continue;
            }
            ++rank;
            m.records.push_back({concept_name, rank, fs::relative(file, root).generic_string(), options.provenance});
        }
        if (rank == 0) {
            throw InputError(fmt::format("concept '{}' has no readable images", concept_name));
        }
    }
    return m;
}

std::string manifest_to_json(const CorpusManifest& m) {
    nlohmann::ordered_json j;
    j["root"] = m.root.generic_string();
    j["accepted_extensions"] = std::vector<std::string>(std::begin(kAcceptedExtensions),
                                                        std::end(kAcceptedExtensions));
    j["skipped"] = m.skipped;
    auto& recs = j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : m.records) {
        recs.push_back({{"concept", r.concept_name},
                        {"rank", r.rank},
                        {"path", r.path},
                        {"provenance", provenance_name(r.provenance)}});
    }
    return j.dump(2) + "\n";
}

CorpusManifest manifest_from_json(std::string_view text) {
    CorpusManifest m;
    try {
        const auto j = nlohmann::json::parse(text);
        m.root = j.at("root").get<std::string>();
        m.skipped = j.value("skipped", std::size_t{0});
        for (const auto& r : j.at("records")) {
            const auto prov = parse_provenance(r.at("provenance").get<std::string>());
            if (!prov) {
                throw InputError("unknown provenance in manifest");
            }
            m.records.push_back({r.at("concept").get<std::string>(), r.at("rank").get<int>(),
                                 r.at("path").get<std::string>(), *prov});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::vector<FetchedImage> LocalMirrorFetcher::fetch(const std::string& concept_name, std::size_t limit) {
    const fs::path dir = root_ / concept_name;
    if (!fs::is_directory(dir)) {
        throw IoError("mirror has no directory for concept '" + concept_name + "'");
    }
    std::vector<FetchedImage> out;
    for (const auto& file : image_files(dir)) {
        if (out.size() >= limit) {
            break;
        }
        const std::string bytes = io::read_file(file);
        out.push_back({file.filename().string(), lower(file.extension().string()),
                       std::vector<std::uint8_t>(bytes.begin(), bytes.end())});
    }
    return out;
}

CorpusManifest fetch_corpus(ImageFetcher& provider, const std::vector<std::string>& concepts,
                            std::size_t limit, const fs::path& destination, Provenance provenance) {
    if (limit == 0) {
        throw InputError("image limit must be at least 1");
    }
    if (concepts.empty()) {
        throw InputError("no concepts to fetch");
    }
    for (const auto& concept_name : concepts) {
        std::vector<FetchedImage> images;
        try {
            images = provider.fetch(concept_name, limit);
        } catch (const std::exception& e) {
            throw IoError(fmt::format("fetch failed for concept '{}': {}", concept_name, e.what()));
        }
        if (images.empty()) {
            throw InputError(fmt::format("provider returned no images for concept '{}'", concept_name));
        }
        if (images.size() > limit) {
            images.resize(limit);
        }
        const fs::path dir = destination / concept_name;
        fs::create_directories(dir);
        int n = 0;
        for (const auto& img : images) {
            ++n;
            std::string name = img.name.empty() ? fmt::format("{:03d}{}", n, img.extension) : img.name;
            io::write_file(dir / name, std::string_view(reinterpret_cast<const char*>(img.bytes.data()),
                                                        img.bytes.size()));
        }
    }
    ScanOptions opts;
    opts.limit = limit;
    opts.provenance = provenance;
    opts.concepts = concepts;
    return scan_corpus(destination, opts);
}

}  // namespace colorassoc
