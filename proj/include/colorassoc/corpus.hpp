#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace colorassoc {

enum class Provenance { TopSearch, Photo, Cartoon, Custom };

std::string_view provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view name);

struct ImageRecord {
    std::string concept_name;
    int rank = 0;               ///< 1-based, lexicographic filename order
    std::string path;           ///< relative to the manifest root, '/' separated
    Provenance provenance = Provenance::TopSearch;

    bool operator==(const ImageRecord&) const = default;
};

/// Images per concept in (concept, rank) order.
struct CorpusManifest {
    std::filesystem::path root;
    std::vector<ImageRecord> records;
    std::size_t skipped = 0;  ///< files with an accepted extension that failed to decode

    std::vector<std::string> concepts() const;
    std::vector<const ImageRecord*> records_for(std::string_view concept_name) const;
    std::filesystem::path resolve(const ImageRecord& r) const { return root / r.path; }
};

inline constexpr std::string_view kAcceptedExtensions[] = {".jpg", ".jpeg", ".png"};

struct ScanOptions {
    std::size_t limit = 50;
    Provenance provenance = Provenance::TopSearch;
    std::vector<std::string> concepts;  ///< empty: every subdirectory of the root
};

/// Scans root/<concept>/<name>.<jpg|jpeg|png>. Undecodable files are skipped
/// with a warning; a concept left with no images is an error.
CorpusManifest scan_corpus(const std::filesystem::path& root, const ScanOptions& options);

std::string manifest_to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(std::string_view json);

struct FetchedImage {
    std::string name;  ///< file name to store under; generated when empty
    std::string extension;
    std::vector<std::uint8_t> bytes;
};

/// Source of candidate images for a concept query, best match first.
class ImageFetcher {
public:
    virtual ~ImageFetcher() = default;
    virtual std::vector<FetchedImage> fetch(const std::string& concept_name, std::size_t limit) = 0;
};

/// Serves images from an existing root/<concept>/ tree.
class LocalMirrorFetcher final : public ImageFetcher {
public:
    explicit LocalMirrorFetcher(std::filesystem::path root) : root_(std::move(root)) {}
    std::vector<FetchedImage> fetch(const std::string& concept_name, std::size_t limit) override;

private:
    std::filesystem::path root_;
};

/// Stores fetched images under destination/<concept>/ and scans the result.
CorpusManifest fetch_corpus(ImageFetcher& provider, const std::vector<std::string>& concepts,
                            std::size_t limit, const std::filesystem::path& destination,
                            Provenance provenance = Provenance::TopSearch);

}  // namespace colorassoc
