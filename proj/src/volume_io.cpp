#include "rrw/volume_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>

#include "rrw/csv.hpp"

namespace rrw {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;  // header + 4-byte extension flag

template <class T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));  // little-endian host assumed (checked in CMake era: x86/aarch64)
  return v;
}

template <class T>
void write_le(unsigned char* p, T v) {
  std::memcpy(p, &v, sizeof(T));
}

struct RawNifti {
  VolumeGeometry geom;
  NiftiType datatype;
  std::vector<double> values;  // scaled
};

std::vector<unsigned char> read_all_bytes(const std::string& path) {
  // gzopen reads both gzip (0x1F8B prefix) and plain files transparently.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) fail(ErrorKind::io, "cannot open volume file: " + path);
  std::vector<unsigned char> data;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) data.insert(data.end(), buf, buf + n);
  bool bad = n < 0;
  gzclose(f);
  if (bad) fail(ErrorKind::format, "corrupt or truncated (gzip) volume file: " + path);
  return data;
}

void check_axis_aligned(const double m[3][3], const std::string& path) {
  for (int i = 0; i < 3; ++i) {
    double diag = std::abs(m[i][i]);
    if (diag <= 0.0) fail(ErrorKind::unsupported_orientation, "degenerate affine in " + path);
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      if (std::abs(m[i][j]) > 1e-6 * diag)
        fail(ErrorKind::unsupported_orientation,
             "non-axis-aligned affine (rotated/oblique volumes unsupported): " + path);
    }
  }
}

RawNifti parse_nifti(const std::vector<unsigned char>& bytes, const std::string& path) {
  if (bytes.size() < kDataOffset) fail(ErrorKind::format, "file too small for NIfTI-1 header: " + path);
  const unsigned char* h = bytes.data();

  std::int32_t sizeof_hdr = read_le<std::int32_t>(h + 0);
  if (sizeof_hdr != 348) {
    // 1543569408 is 348 byte-swapped: a big-endian file rather than garbage.
    if (sizeof_hdr == 1543569408)
      fail(ErrorKind::format, "big-endian NIfTI unsupported (little-endian subset): " + path);
    fail(ErrorKind::format, "malformed NIfTI header (sizeof_hdr != 348): " + path);
  }

  char magic[4];
  std::memcpy(magic, h + 344, 4);
  if (std::memcmp(magic, "ni1", 4) == 0)
    fail(ErrorKind::format, "two-file NIfTI (.hdr/.img) unsupported; use single-file .nii: " + path);
  if (std::memcmp(magic, "n+1", 4) != 0)
    fail(ErrorKind::format, "bad NIfTI magic: " + path);

  std::int16_t dim0 = read_le<std::int16_t>(h + 40);
  if (dim0 < 1 || dim0 > 7) fail(ErrorKind::format, "invalid dim[0] in NIfTI header: " + path);
  std::array<int, 3> dims{1, 1, 1};
  for (int a = 0; a < 3 && a < dim0; ++a) {
    std::int16_t d = read_le<std::int16_t>(h + 40 + 2 * (a + 1));
    if (d < 1) fail(ErrorKind::format, "nonpositive dimension in NIfTI header: " + path);
    dims[a] = d;
  }
  for (int a = 4; a <= dim0; ++a) {
    std::int16_t d = read_le<std::int16_t>(h + 40 + 2 * a);
    if (d > 1) fail(ErrorKind::format, "multi-frame/4D NIfTI unsupported: " + path);
  }

  std::int16_t datatype = read_le<std::int16_t>(h + 70);
  if (datatype != 2 && datatype != 4 && datatype != 16)
    fail(ErrorKind::unsupported_type,
         "unsupported NIfTI datatype " + std::to_string(datatype) + " (uint8/int16/float32 only): " + path);

  std::array<double, 3> spacing;
  for (int a = 0; a < 3; ++a) {
    float p = read_le<float>(h + 76 + 4 * (a + 1));
    if (!(p > 0.0f)) fail(ErrorKind::format, "nonpositive pixdim in NIfTI header: " + path);
    spacing[a] = p;
  }

  float vox_offset_f = read_le<float>(h + 108);
  std::size_t vox_offset = vox_offset_f <= 0.0f ? kDataOffset : static_cast<std::size_t>(vox_offset_f);
  if (vox_offset < kHeaderSize) fail(ErrorKind::format, "invalid vox_offset: " + path);

  float scl_slope = read_le<float>(h + 112);
  float scl_inter = read_le<float>(h + 116);
  bool scaled = scl_slope != 0.0f && !(scl_slope == 1.0f && scl_inter == 0.0f);

  std::int16_t qform_code = read_le<std::int16_t>(h + 252);
  std::int16_t sform_code = read_le<std::int16_t>(h + 254);
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  if (sform_code > 0) {
    double m[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        float v = read_le<float>(h + 280 + 16 * r + 4 * c);
        if (c < 3) m[r][c] = v;
        else origin[r] = v;
      }
    }
    check_axis_aligned(m, path);
  } else if (qform_code > 0) {
    double b = read_le<float>(h + 256), c = read_le<float>(h + 260), d = read_le<float>(h + 264);
    if (std::abs(b) > 1e-6 || std::abs(c) > 1e-6 || std::abs(d) > 1e-6)
      fail(ErrorKind::unsupported_orientation, "rotated qform unsupported: " + path);
    origin = {read_le<float>(h + 268), read_le<float>(h + 272), read_le<float>(h + 276)};
  }

  RawNifti out;
  out.geom.dims = dims;
  out.geom.spacing = spacing;
  out.geom.origin = origin;
  out.datatype = static_cast<NiftiType>(datatype);

  std::size_t n = out.geom.voxel_count();
  std::size_t elem = datatype == 2 ? 1 : datatype == 4 ? 2 : 4;
  if (bytes.size() < vox_offset + n * elem)
    fail(ErrorKind::format, "NIfTI payload truncated: " + path);
  const unsigned char* d = bytes.data() + vox_offset;

  out.values.resize(n);
  switch (datatype) {
    case 2:
      for (std::size_t i = 0; i < n; ++i) out.values[i] = d[i];
      break;
    case 4:
      for (std::size_t i = 0; i < n; ++i) out.values[i] = read_le<std::int16_t>(d + 2 * i);
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) out.values[i] = read_le<float>(d + 4 * i);
      break;
  }
  if (scaled)
    for (double& v : out.values) v = v * scl_slope + scl_inter;
  return out;
}

std::vector<unsigned char> build_nifti_bytes(const VolumeGeometry& geom, NiftiType datatype,
                                             const std::vector<double>& values, const std::string& path) {
  std::size_t n = geom.voxel_count();
  std::size_t elem = datatype == NiftiType::uint8 ? 1 : datatype == NiftiType::int16 ? 2 : 4;
  std::vector<unsigned char> bytes(kDataOffset + n * elem, 0);
  unsigned char* h = bytes.data();

  write_le<std::int32_t>(h + 0, 348);
  write_le<std::int16_t>(h + 40, 3);
  for (int a = 0; a < 3; ++a) write_le<std::int16_t>(h + 40 + 2 * (a + 1), static_cast<std::int16_t>(geom.dims[a]));
  for (int a = 4; a < 8; ++a) write_le<std::int16_t>(h + 40 + 2 * a, 1);
  write_le<std::int16_t>(h + 70, static_cast<std::int16_t>(datatype));
  write_le<std::int16_t>(h + 72, static_cast<std::int16_t>(elem * 8));
  write_le<float>(h + 76, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) write_le<float>(h + 76 + 4 * (a + 1), static_cast<float>(geom.spacing[a]));
  write_le<float>(h + 108, static_cast<float>(kDataOffset));
  write_le<float>(h + 112, 1.0f);
  write_le<float>(h + 116, 0.0f);
  h[123] = 2;  // xyzt_units: millimetres
  write_le<std::int16_t>(h + 254, 1);  // sform_code
  for (int r = 0; r < 3; ++r) {
    write_le<float>(h + 280 + 16 * r + 4 * r, static_cast<float>(geom.spacing[r]));
    write_le<float>(h + 280 + 16 * r + 12, static_cast<float>(geom.origin[r]));
  }
  std::memcpy(h + 344, "n+1", 4);

  unsigned char* d = bytes.data() + kDataOffset;
  switch (datatype) {
    case NiftiType::uint8:
      for (std::size_t i = 0; i < n; ++i) {
        double v = values[i];
        if (v < 0.0 || v > 255.0) fail(ErrorKind::value, "value out of uint8 range writing " + path);
        d[i] = static_cast<unsigned char>(std::lround(v));
      }
      break;
    case NiftiType::int16:
      for (std::size_t i = 0; i < n; ++i) {
        double v = std::round(values[i]);
        if (v < -32768.0 || v > 32767.0) fail(ErrorKind::value, "value out of int16 range writing " + path);
        std::int16_t s = static_cast<std::int16_t>(v);
        std::memcpy(d + 2 * i, &s, 2);
      }
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) {
        float f = static_cast<float>(values[i]);
        std::memcpy(d + 4 * i, &f, 4);
      }
      break;
  }
  return bytes;
}

void write_bytes(const std::vector<unsigned char>& bytes, const std::string& path) {
  bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (!f) fail(ErrorKind::io, "cannot open for writing: " + path);
    std::size_t off = 0;
    while (off < bytes.size()) {
      unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - off, 1u << 24));
      if (gzwrite(f, bytes.data() + off, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        fail(ErrorKind::io, "write failure on " + path);
      }
      off += chunk;
    }
    if (gzclose(f) != Z_OK) fail(ErrorKind::io, "close failure on " + path);
  } else {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) fail(ErrorKind::io, "cannot open for writing: " + path);
    std::size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
    int rc = std::fclose(f);
    if (written != bytes.size() || rc != 0) fail(ErrorKind::io, "write failure on " + path);
  }
}

}  // namespace

ImageVolume read_image(const std::string& path) {
  RawNifti raw = parse_nifti(read_all_bytes(path), path);
  ImageVolume img;
  img.geom = raw.geom;
  img.values = std::move(raw.values);
  img.validate();
  return img;
}

MaskVolume read_mask(const std::string& path) {
  RawNifti raw = parse_nifti(read_all_bytes(path), path);
  MaskVolume m;
  m.geom = raw.geom;
  m.values.resize(raw.values.size());
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    double v = raw.values[i];
    if (v != 0.0 && v != 1.0) fail(ErrorKind::value, "mask file contains non-binary values: " + path);
    m.values[i] = static_cast<std::uint8_t>(v);
  }
  m.validate();
  return m;
}

void write_volume(const ImageVolume& v, const std::string& path, NiftiType datatype) {
  v.validate();
  if (datatype == NiftiType::uint8) fail(ErrorKind::argument, "uint8 is reserved for masks");
  write_bytes(build_nifti_bytes(v.geom, datatype, v.values, path), path);
}

void write_volume(const MaskVolume& m, const std::string& path) {
  m.validate();
  std::vector<double> vals(m.values.begin(), m.values.end());
  write_bytes(build_nifti_bytes(m.geom, NiftiType::uint8, vals, path), path);
}

std::string roi_name_str(RoiName r) { return r == RoiName::tumor ? "tumor" : "liver"; }

RoiName parse_roi_name(const std::string& s) {
  if (s == "tumor") return RoiName::tumor;
  if (s == "liver") return RoiName::liver;
  fail(ErrorKind::value, "unknown ROI name '" + s + "' (expected tumor or liver)");
}

bool CohortManifest::is_survival_cohort() const {
  return !entries.empty() && entries.front().time_days.has_value();
}

std::vector<double> CohortManifest::thickness_levels() const {
  std::set<double> s;
  for (const auto& e : entries) s.insert(e.slice_thickness_mm);
  return {s.begin(), s.end()};
}

std::vector<std::optional<double>> CohortManifest::asir_levels() const {
  std::set<double> s;
  bool absent = false;
  for (const auto& e : entries) {
    if (e.asir_percent) s.insert(*e.asir_percent);
    else absent = true;
  }
  std::vector<std::optional<double>> out;
  if (absent) out.push_back(std::nullopt);
  for (double v : s) out.push_back(v);
  return out;
}

std::vector<std::string> CohortManifest::subjects() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.subject_id);
  return {s.begin(), s.end()};
}

CohortManifest load_manifest(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_subj = t.require_column("subject_id");
  int c_roi = t.require_column("roi");
  int c_img = t.require_column("image_path");
  int c_mask = t.require_column("mask_path");
  int c_thick = t.require_column("slice_thickness_mm");
  int c_asir = t.require_column("asir_percent");
  int c_time = t.require_column("time_days");
  int c_event = t.require_column("event");

  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  CohortManifest m;
  std::set<std::tuple<std::string, RoiName, double, double>> seen;
  int n_survival = 0;
  std::map<std::string, std::pair<double, bool>> subject_outcome;

  for (const auto& row : t.rows) {
    ManifestEntry e;
    e.subject_id = row[c_subj];
    if (e.subject_id.empty()) fail(ErrorKind::value, "empty subject_id in manifest");
    e.roi = parse_roi_name(row[c_roi]);
    e.image_path = resolve(row[c_img]);
    e.mask_path = resolve(row[c_mask]);
    e.slice_thickness_mm = parse_double(row[c_thick], "slice_thickness_mm");
    if (!(e.slice_thickness_mm > 0.0)) fail(ErrorKind::value, "slice_thickness_mm must be > 0");
    e.asir_percent = parse_optional_double(row[c_asir], "asir_percent");

    const std::string& ts = row[c_time];
    const std::string& es = row[c_event];
    if (ts.empty() != es.empty())
      fail(ErrorKind::schema, "time_days and event must be both present or both empty");
    if (!ts.empty()) {
      double time = parse_double(ts, "time_days");
      if (!(time > 0.0)) fail(ErrorKind::value, "time_days must be > 0 (subject " + e.subject_id + ")");
      bool ev;
      if (es == "1" || es == "true") ev = true;
      else if (es == "0" || es == "false") ev = false;
      else fail(ErrorKind::value, "event must be 0/1/true/false");
      e.time_days = time;
      e.event = ev;
      ++n_survival;
      auto [it, inserted] = subject_outcome.try_emplace(e.subject_id, time, ev);
      if (!inserted && (it->second.first != time || it->second.second != ev))
        fail(ErrorKind::value, "inconsistent outcome for subject " + e.subject_id);
    }

    auto key = std::make_tuple(e.subject_id, e.roi, e.slice_thickness_mm,
                               e.asir_percent.value_or(-1.0));
    if (!seen.insert(key).second)
      fail(ErrorKind::duplicate, "duplicate manifest row for (" + e.subject_id + ", " +
                                     roi_name_str(e.roi) + ", " + fmt_double(e.slice_thickness_mm) + ", " +
                                     fmt_optional(e.asir_percent) + ")");
    m.entries.push_back(std::move(e));
  }

  if (n_survival != 0 && n_survival != static_cast<int>(m.entries.size()))
    fail(ErrorKind::schema, "manifest mixes rows with and without survival outcomes");

  // Canonical order makes loading independent of on-disk row order.
  std::sort(m.entries.begin(), m.entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    auto ka = std::make_tuple(a.subject_id, static_cast<int>(a.roi), a.slice_thickness_mm,
                              a.asir_percent.value_or(-1.0));
    auto kb = std::make_tuple(b.subject_id, static_cast<int>(b.roi), b.slice_thickness_mm,
                              b.asir_percent.value_or(-1.0));
    return ka < kb;
  });
  return m;
}

void write_manifest(const CohortManifest& m, const std::string& path) {
  CsvWriter w(path, {"subject_id", "roi", "image_path", "mask_path", "slice_thickness_mm",
                     "asir_percent", "time_days", "event"});
  for (const auto& e : m.entries) {
    w.write_row({e.subject_id, roi_name_str(e.roi), e.image_path, e.mask_path,
                 fmt_double(e.slice_thickness_mm), fmt_optional(e.asir_percent),
                 fmt_optional(e.time_days), e.event ? (*e.event ? "1" : "0") : ""});
  }
  w.close();
}

}  // namespace rrw
