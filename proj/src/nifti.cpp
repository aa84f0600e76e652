#include "volmetrics/nifti.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace volmetrics {

namespace {

// 348-byte NIfTI-1 header; all fields naturally aligned.
struct NiftiHeader {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

enum NiftiDatatype : std::int16_t {
    DT_UINT8 = 2,
    DT_INT16 = 4,
    DT_INT32 = 8,
    DT_FLOAT32 = 16,
    DT_FLOAT64 = 64,
};

template <typename T>
T byteswap(T v) {
    unsigned char* p = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(p[i], p[sizeof(T) - 1 - i]);
    return v;
}

void swap_header(NiftiHeader& h) {
    h.sizeof_hdr = byteswap(h.sizeof_hdr);
    h.extents = byteswap(h.extents);
    h.session_error = byteswap(h.session_error);
    for (auto& d : h.dim) d = byteswap(d);
    h.intent_p1 = byteswap(h.intent_p1);
    h.intent_p2 = byteswap(h.intent_p2);
    h.intent_p3 = byteswap(h.intent_p3);
    h.intent_code = byteswap(h.intent_code);
    h.datatype = byteswap(h.datatype);
    h.bitpix = byteswap(h.bitpix);
    h.slice_start = byteswap(h.slice_start);
    for (auto& p : h.pixdim) p = byteswap(p);
    h.vox_offset = byteswap(h.vox_offset);
    h.scl_slope = byteswap(h.scl_slope);
    h.scl_inter = byteswap(h.scl_inter);
    h.slice_end = byteswap(h.slice_end);
    h.cal_max = byteswap(h.cal_max);
    h.cal_min = byteswap(h.cal_min);
    h.slice_duration = byteswap(h.slice_duration);
    h.toffset = byteswap(h.toffset);
    h.glmax = byteswap(h.glmax);
    h.glmin = byteswap(h.glmin);
    h.qform_code = byteswap(h.qform_code);
    h.sform_code = byteswap(h.sform_code);
    h.quatern_b = byteswap(h.quatern_b);
    h.quatern_c = byteswap(h.quatern_c);
    h.quatern_d = byteswap(h.quatern_d);
    h.qoffset_x = byteswap(h.qoffset_x);
    h.qoffset_y = byteswap(h.qoffset_y);
    h.qoffset_z = byteswap(h.qoffset_z);
    for (auto& s : h.srow_x) s = byteswap(s);
    for (auto& s : h.srow_y) s = byteswap(s);
    for (auto& s : h.srow_z) s = byteswap(s);
}

struct GzFile {
    gzFile f = nullptr;
    GzFile(const std::string& path, const char* mode) : f(gzopen(path.c_str(), mode)) {}
    ~GzFile() { if (f) gzclose(f); }
    GzFile(const GzFile&) = delete;
    GzFile& operator=(const GzFile&) = delete;
    explicit operator bool() const { return f != nullptr; }
};

void gz_read_exact(gzFile f, void* buf, std::size_t n, const char* what) {
    std::size_t got = 0;
    char* p = static_cast<char*>(buf);
    while (got < n) {
        unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - got, 1u << 28));
        int r = gzread(f, p + got, chunk);
        if (r <= 0)
            throw std::runtime_error(std::string("truncated NIfTI file while reading ") + what);
        got += static_cast<std::size_t>(r);
    }
}

void gz_write_exact(gzFile f, const void* buf, std::size_t n) {
    const char* p = static_cast<const char*>(buf);
    std::size_t put = 0;
    while (put < n) {
        unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - put, 1u << 28));
        int r = gzwrite(f, p + put, chunk);
        if (r <= 0)
            throw std::runtime_error("failed writing NIfTI payload");
        put += static_cast<std::size_t>(r);
    }
}

template <typename T>
void convert_payload(gzFile f, std::size_t n, bool swapped, float slope, float inter,
                     std::vector<float>& out) {
    std::vector<T> raw(n);
    gz_read_exact(f, raw.data(), n * sizeof(T), "voxel payload");
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        T v = swapped ? byteswap(raw[i]) : raw[i];
        float x = static_cast<float>(v);
        if (slope != 0.0f)
            x = x * slope + inter;
        out[i] = x;
    }
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

Volume read_nifti(const std::string& path) {
    GzFile file(path, "rb");
    if (!file)
        throw std::runtime_error("cannot open NIfTI file: " + path);

    NiftiHeader h{};
    gz_read_exact(file.f, &h, sizeof(h), "header");

    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        swap_header(h);
        swapped = true;
        if (h.sizeof_hdr != 348)
            throw std::runtime_error("malformed NIfTI header (sizeof_hdr != 348 in both byte orders): " + path);
    }

    if (h.dim[0] != 3 && h.dim[0] != 4)
        throw std::runtime_error("unsupported NIfTI dimensionality dim[0]=" + std::to_string(h.dim[0]));
    if (h.dim[0] == 4 && h.dim[4] != 1)
        throw std::runtime_error("4D NIfTI with non-singleton time axis is unsupported");
    for (int k = 1; k <= 3; ++k) {
        if (h.dim[k] <= 0)
            throw std::runtime_error("non-positive NIfTI dim[" + std::to_string(k) + "]");
        if (h.pixdim[k] == 0.0f || !std::isfinite(h.pixdim[k]))
            throw std::runtime_error("non-positive NIfTI pixdim[" + std::to_string(k) + "]");
    }

    Volume v;
    v.dims = {h.dim[1], h.dim[2], h.dim[3]};
    v.spacing = {std::abs(h.pixdim[1]), std::abs(h.pixdim[2]), std::abs(h.pixdim[3])};
    v.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};

    // Skip any header extension bytes up to vox_offset.
    long offset = static_cast<long>(h.vox_offset);
    if (offset < 348)
        offset = 352;
    for (long skip = offset - 348; skip > 0;) {
        char pad[256];
        int r = gzread(file.f, pad, static_cast<unsigned>(std::min<long>(skip, sizeof(pad))));
        if (r <= 0)
            throw std::runtime_error("truncated NIfTI file before voxel payload");
        skip -= r;
    }

    const std::size_t n = v.size();
    switch (h.datatype) {
    case DT_UINT8:
        convert_payload<std::uint8_t>(file.f, n, false, h.scl_slope, h.scl_inter, v.data);
        break;
    case DT_INT16:
        convert_payload<std::int16_t>(file.f, n, swapped, h.scl_slope, h.scl_inter, v.data);
        break;
    case DT_INT32:
        convert_payload<std::int32_t>(file.f, n, swapped, h.scl_slope, h.scl_inter, v.data);
        break;
    case DT_FLOAT32:
        convert_payload<float>(file.f, n, swapped, h.scl_slope, h.scl_inter, v.data);
        break;
    case DT_FLOAT64:
        convert_payload<double>(file.f, n, swapped, h.scl_slope, h.scl_inter, v.data);
        break;
    default:
        throw std::runtime_error("unsupported NIfTI datatype code " + std::to_string(h.datatype));
    }

    bool binary = h.datatype == DT_UINT8 && h.scl_slope == 0.0f;
    if (binary)
        for (float x : v.data)
            if (x != 0.0f && x != 1.0f) { binary = false; break; }
    v.unit = binary ? Unit::Label : Unit::HU;
    return v;
}

void write_nifti(const Volume& v, const std::string& path) {
    validate(v);

    NiftiHeader h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(v.dims[0]);
    h.dim[2] = static_cast<std::int16_t>(v.dims[1]);
    h.dim[3] = static_cast<std::int16_t>(v.dims[2]);
    h.dim[4] = h.dim[5] = h.dim[6] = h.dim[7] = 1;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(v.spacing.sx);
    h.pixdim[2] = static_cast<float>(v.spacing.sy);
    h.pixdim[3] = static_cast<float>(v.spacing.sz);
    h.vox_offset = 352.0f;
    h.scl_slope = 0.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // NIFTI_UNITS_MM
    h.qform_code = 1;
    h.quatern_b = h.quatern_c = h.quatern_d = 0.0f;
    h.qoffset_x = static_cast<float>(v.origin[0]);
    h.qoffset_y = static_cast<float>(v.origin[1]);
    h.qoffset_z = static_cast<float>(v.origin[2]);
    std::snprintf(h.descrip, sizeof(h.descrip), "volmetrics %s", unit_name(v.unit));
    std::memcpy(h.magic, "n+1", 4);

    const bool as_uint8 = v.unit == Unit::Label;
    h.datatype = as_uint8 ? DT_UINT8 : DT_FLOAT32;
    h.bitpix = as_uint8 ? 8 : 32;

    // "wT" writes uncompressed through the same gz interface.
    GzFile file(path, ends_with(path, ".gz") ? "wb" : "wbT");
    if (!file)
        throw std::runtime_error("cannot open for writing: " + path);

    gz_write_exact(file.f, &h, sizeof(h));
    const char pad[4] = {0, 0, 0, 0};
    gz_write_exact(file.f, pad, 4);

    if (as_uint8) {
        std::vector<std::uint8_t> raw(v.data.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            raw[i] = v.data[i] != 0.0f ? 1 : 0;
        gz_write_exact(file.f, raw.data(), raw.size());
    } else {
        gz_write_exact(file.f, v.data.data(), v.data.size() * sizeof(float));
    }
}

Volume read_raw(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side)
        throw std::runtime_error("missing raw sidecar: " + path + ".json");
    nlohmann::json j = nlohmann::json::parse(side);

    Volume v;
    auto d = j.at("dims");
    v.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    auto s = j.at("spacing");
    v.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
    if (j.contains("origin")) {
        auto o = j.at("origin");
        v.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
    }
    v.unit = unit_from_name(j.at("unit").get<std::string>());

    std::ifstream payload(path, std::ios::binary);
    if (!payload)
        throw std::runtime_error("cannot open raw payload: " + path);
    v.data.resize(v.size());
    payload.read(reinterpret_cast<char*>(v.data.data()),
                 static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (payload.gcount() != static_cast<std::streamsize>(v.data.size() * sizeof(float)))
        throw std::runtime_error("raw payload shorter than dims imply: " + path);
    return v;
}

void write_raw(const Volume& v, const std::string& path) {
    validate(v);
    std::ofstream payload(path, std::ios::binary);
    if (!payload)
        throw std::runtime_error("cannot open for writing: " + path);
    payload.write(reinterpret_cast<const char*>(v.data.data()),
                  static_cast<std::streamsize>(v.data.size() * sizeof(float)));

    nlohmann::json j;
    j["dims"] = v.dims;
    j["spacing"] = {v.spacing.sx, v.spacing.sy, v.spacing.sz};
    j["origin"] = v.origin;
    j["unit"] = unit_name(v.unit);
    std::ofstream side(path + ".json");
    side << j.dump(2) << "\n";
}

} // namespace volmetrics
