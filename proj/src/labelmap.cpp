#include "semcast/labelmap.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace semcast {

namespace {

// Skips whitespace and '#' comment lines, PNM-style.
bool next_pnm_token(std::istream& in, std::string& token) {
    token.clear();
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) return false;
    do {
        token.push_back(static_cast<char>(c));
    } while ((c = in.get()) != EOF && !std::isspace(c));
    return true;
}

long parse_long(const std::string& token, const char* what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw MalformedFile(std::string("label map: bad ") + what + " '" + token + "'");
    }
}

LabelMapStats finish(std::vector<std::int64_t> counts, int width, int height, int num_classes) {
    LabelMapStats stats;
    stats.width = width;
    stats.height = height;
    stats.class_pixel_counts = std::move(counts);
    stats.geometry.total_pixels = static_cast<std::int64_t>(width) * height;
    stats.geometry.num_classes = num_classes;

    std::int64_t labeled = 0;
    for (std::int64_t c : stats.class_pixel_counts) labeled += c;
    // |X_bar| / |X| = (sum_l |X_l| / L) / |X|
    stats.geometry.class_pixel_fraction =
        static_cast<double>(labeled) / num_classes / static_cast<double>(stats.geometry.total_pixels);
    stats.geometry.validate();
    return stats;
}

LabelMapStats ingest_pnm(std::ifstream& in, int num_classes, bool binary) {
    std::string token;
    if (!next_pnm_token(in, token)) throw MalformedFile("label map: missing width");
    const long width = parse_long(token, "width");
    if (!next_pnm_token(in, token)) throw MalformedFile("label map: missing height");
    const long height = parse_long(token, "height");
    if (!next_pnm_token(in, token)) throw MalformedFile("label map: missing maxval");
    const long maxval = parse_long(token, "maxval");
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw MalformedFile("label map: bad graymap dimensions");
    }

    std::vector<std::int64_t> counts(num_classes, 0);
    const std::int64_t total = static_cast<std::int64_t>(width) * height;
    auto record = [&](long label) {
        if (label < 0 || label >= num_classes) {
            throw LabelOutOfRange("label map: label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
        }
        ++counts[label];
    };

    if (binary) {
        const int bytes = maxval > 255 ? 2 : 1;
        for (std::int64_t i = 0; i < total; ++i) {
            int hi = in.get();
            if (hi == EOF) throw MalformedFile("label map: truncated pixel data");
            long v = hi;
            if (bytes == 2) {
                const int lo = in.get();
                if (lo == EOF) throw MalformedFile("label map: truncated pixel data");
                v = (v << 8) | lo;
            }
            record(v);
        }
    } else {
        for (std::int64_t i = 0; i < total; ++i) {
            if (!next_pnm_token(in, token)) throw MalformedFile("label map: truncated pixel data");
            record(parse_long(token, "pixel"));
        }
    }
    return finish(std::move(counts), static_cast<int>(width), static_cast<int>(height), num_classes);
}

LabelMapStats ingest_csv(std::ifstream& in, int num_classes) {
    std::vector<std::int64_t> counts(num_classes, 0);
    std::string line;
    int width = -1;
    int height = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        int cols = 0;
        std::string token;
        while (row >> token) {
            const long label = parse_long(token, "cell");
            if (label < 0 || label >= num_classes) {
                throw LabelOutOfRange("label map: label " + std::to_string(label) + " outside [0, " +
                                      std::to_string(num_classes) + ")");
            }
            ++counts[label];
            ++cols;
        }
        if (width < 0) {
            width = cols;
        } else if (cols != width) {
            throw MalformedFile("label map: ragged CSV rows");
        }
        ++height;
    }
    if (width <= 0 || height <= 0) throw MalformedFile("label map: empty file");
    return finish(std::move(counts), width, height, num_classes);
}

}  // namespace

LabelMapStats ingest_label_map(const std::string& path, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("ingest_label_map: num_classes must be >= 1");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedFile("label map: cannot open " + path);

    const int c0 = in.peek();
    if (c0 == EOF) throw MalformedFile("label map: empty file");
    if (c0 == 'P') {
        std::string magic;
        in >> magic;
        if (magic == "P2") return ingest_pnm(in, num_classes, false);
        if (magic == "P5") return ingest_pnm(in, num_classes, true);
        throw MalformedFile("label map: unsupported magic '" + magic + "'");
    }
    return ingest_csv(in, num_classes);
}

}  // namespace semcast
