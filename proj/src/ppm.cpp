#include "lwga/ppm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "lwga/errors.hpp"

namespace lwga {

namespace {

// Next whitespace-delimited token, with '#' comments running to end of line.
int read_header_int(std::istream& in, const std::string& path) {
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
        } else if (!std::isspace(ch)) {
            break;
        }
    }
    if (ch == EOF || !std::isdigit(ch))
        throw IoError(IoErrc::malformed, "'" + path + "': bad image header");
    long v = 0;
    do {
        v = v * 10 + (ch - '0');
        if (v > 1 << 20) throw IoError(IoErrc::malformed, "'" + path + "': header value too big");
        ch = in.get();
    } while (ch != EOF && std::isdigit(ch));
    if (ch != EOF) in.unget();
    return static_cast<int>(v);
}

} // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(IoErrc::unreadable, "cannot open '" + path + "'");
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '6')
        throw IoError(IoErrc::bad_magic, "'" + path + "' is not a binary P6 image");
    const int w = read_header_int(f, path);
    const int h = read_header_int(f, path);
    const int maxval = read_header_int(f, path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw IoError(IoErrc::malformed, "'" + path + "': unsupported image dimensions/depth");
    f.get(); // single whitespace byte before the raster

    std::vector<unsigned char> raster(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (static_cast<std::size_t>(f.gcount()) != raster.size())
        throw IoError(IoErrc::truncated, "'" + path + "': raster shorter than header promises");

    Tensor img(1, 3, h, w);
    const float inv = 1.0f / static_cast<float>(maxval);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(0, c, y, x) =
                    static_cast<float>(raster[(static_cast<std::size_t>(y) * w + x) * 3 + c]) *
                    inv;
    return img;
}

void write_ppm(const std::string& path, const Tensor& img) {
    if (img.n() != 1 || img.c() != 3)
        throw ShapeError("image writer expects 1x3xHxW, got " + img.shape_str());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(IoErrc::unreadable, "cannot open '" + path + "' for writing");
    f << "P6\n" << img.w() << " " << img.h() << "\n255\n";
    std::vector<unsigned char> raster(static_cast<std::size_t>(img.w()) * img.h() * 3);
    for (int y = 0; y < img.h(); ++y)
        for (int x = 0; x < img.w(); ++x)
            for (int c = 0; c < 3; ++c) {
                float v = img.at(0, c, y, x);
                v = std::min(1.0f, std::max(0.0f, v));
                raster[(static_cast<std::size_t>(y) * img.w() + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    f.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
    if (!f) throw IoError(IoErrc::unreadable, "short write to '" + path + "'");
}

} // namespace lwga
