#include "semcrypt/dicom.hpp"

#include <algorithm>
#include <cstring>

#include "semcrypt/error.hpp"

namespace semcrypt::dicom {

namespace {

constexpr const char* kTsExplicit = "1.2.840.10008.1.2.1";
constexpr const char* kTsImplicit = "1.2.840.10008.1.2";

// VRs that use the 12-byte explicit header (2 reserved + 4 length bytes).
bool vr_has_long_form(char a, char b) {
  return (a == 'O' && (b == 'B' || b == 'W' || b == 'F')) ||
         (a == 'S' && b == 'Q') || (a == 'U' && (b == 'T' || b == 'N'));
}

bool vr_plausible(char a, char b) {
  return a >= 'A' && a <= 'Z' && b >= 'A' && b <= 'Z';
}

// Minimal dictionary for Implicit VR files; anything unlisted parses as UN.
std::array<char, 2> implicit_vr(uint16_t g, uint16_t e) {
  if (g == 0x0008 && (e == 0x0016 || e == 0x0018)) return {'U', 'I'};
  if (g == 0x0010 && e == 0x0010) return {'P', 'N'};
  if (g == 0x0010 && e == 0x0020) return {'L', 'O'};
  if (g == 0x0028) {
    switch (e) {
      case 0x0002: case 0x0010: case 0x0011: case 0x0100:
      case 0x0101: case 0x0102: case 0x0103:
        return {'U', 'S'};
      case 0x0004:
        return {'C', 'S'};
      case 0x1050: case 0x1051:
        return {'D', 'S'};
      default:
        break;
    }
  }
  if (g == 0x7fe0 && e == 0x0010) return {'O', 'W'};
  return {'U', 'N'};
}

struct Reader {
  const uint8_t* p;
  size_t n;
  size_t pos = 0;

  size_t remaining() const { return n - pos; }

  uint16_t u16() {
    require(remaining() >= 2, Err::TruncatedElement, "unexpected end of data");
    const uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
    pos += 2;
    return v;
  }

  uint32_t u32() {
    require(remaining() >= 4, Err::TruncatedElement, "unexpected end of data");
    const uint32_t v = static_cast<uint32_t>(p[pos]) | (static_cast<uint32_t>(p[pos + 1]) << 8) |
                       (static_cast<uint32_t>(p[pos + 2]) << 16) |
                       (static_cast<uint32_t>(p[pos + 3]) << 24);
    pos += 4;
    return v;
  }

  std::vector<uint8_t> take(size_t len) {
    require(remaining() >= len, Err::TruncatedElement, "declared length exceeds remaining bytes");
    std::vector<uint8_t> out(p + pos, p + pos + len);
    pos += len;
    return out;
  }
};

// Scans for the sequence delimitation item (FFFE,E0DD) with zero length and
// returns the payload before it.  Single forward pass; cannot loop.
std::vector<uint8_t> take_undefined_length(Reader& r) {
  static const uint8_t delim[8] = {0xfe, 0xff, 0xdd, 0xe0, 0x00, 0x00, 0x00, 0x00};
  const size_t start = r.pos;
  for (size_t i = r.pos; i + 8 <= r.n; ++i) {
    if (std::memcmp(r.p + i, delim, 8) == 0) {
      std::vector<uint8_t> out(r.p + start, r.p + i);
      r.pos = i + 8;
      return out;
    }
  }
  fail(Err::TruncatedElement, "undefined-length sequence without delimitation item");
}

DicomElement parse_element_explicit(Reader& r) {
  DicomElement el;
  el.group = r.u16();
  el.element = r.u16();
  require(r.remaining() >= 2, Err::TruncatedElement, "element header truncated");
  el.vr[0] = static_cast<char>(r.p[r.pos]);
  el.vr[1] = static_cast<char>(r.p[r.pos + 1]);
  r.pos += 2;
  require(vr_plausible(el.vr[0], el.vr[1]), Err::TruncatedElement, "implausible VR code");

  uint32_t len;
  if (vr_has_long_form(el.vr[0], el.vr[1])) {
    r.u16();  // reserved
    len = r.u32();
  } else {
    len = r.u16();
  }

  if (len == 0xffffffffu) {
    require(el.vr[0] == 'S' && el.vr[1] == 'Q', Err::TruncatedElement,
            "undefined length outside SQ");
    el.value = take_undefined_length(r);
    return el;
  }
  require(len % 2 == 0, Err::TruncatedElement, "odd element length");
  el.value = r.take(len);
  return el;
}

DicomElement parse_element_implicit(Reader& r) {
  DicomElement el;
  el.group = r.u16();
  el.element = r.u16();
  el.vr = implicit_vr(el.group, el.element);
  const uint32_t len = r.u32();
  if (len == 0xffffffffu) {
    require(el.vr[0] == 'S' && el.vr[1] == 'Q', Err::TruncatedElement,
            "undefined length outside SQ");
    el.value = take_undefined_length(r);
    return el;
  }
  require(len % 2 == 0, Err::TruncatedElement, "odd element length");
  el.value = r.take(len);
  return el;
}

void append_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void append_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

// Explicit VR LE element writer.  Pads odd payloads: UI with NUL, text VRs
// with space, binary with a zero byte.
void append_element(std::vector<uint8_t>& out, uint16_t g, uint16_t e, const char* vr,
                    std::vector<uint8_t> value) {
  if (value.size() % 2 != 0) {
    const char pad = (vr[0] == 'U' && vr[1] == 'I') ? '\0'
                     : (vr[0] == 'O' || vr[0] == 'U') ? '\0'
                                                      : ' ';
    value.push_back(static_cast<uint8_t>(pad));
  }
  append_u16(out, g);
  append_u16(out, e);
  out.push_back(static_cast<uint8_t>(vr[0]));
  out.push_back(static_cast<uint8_t>(vr[1]));
  if (vr_has_long_form(vr[0], vr[1])) {
    append_u16(out, 0);
    require(value.size() <= 0xfffffffeull, Err::Internal, "element too large");
    append_u32(out, static_cast<uint32_t>(value.size()));
  } else {
    require(value.size() <= 0xffff, Err::Internal, "element too large for short form");
    append_u16(out, static_cast<uint16_t>(value.size()));
  }
  out.insert(out.end(), value.begin(), value.end());
}

void append_text(std::vector<uint8_t>& out, uint16_t g, uint16_t e, const char* vr,
                 const std::string& s) {
  append_element(out, g, e, vr, std::vector<uint8_t>(s.begin(), s.end()));
}

void append_us(std::vector<uint8_t>& out, uint16_t g, uint16_t e, uint16_t v) {
  std::vector<uint8_t> payload;
  append_u16(payload, v);
  append_element(out, g, e, "US", std::move(payload));
}

uint64_t fnv1a(const uint8_t* p, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const DicomElement* DicomDataset::find(uint16_t g, uint16_t e) const {
  for (const auto& el : elements) {
    if (el.tag_is(g, e)) return &el;
  }
  return nullptr;
}

std::string element_text(const DicomElement& el) {
  std::string s(el.value.begin(), el.value.end());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
  return s;
}

DicomDataset parse_dicom(const std::vector<uint8_t>& bytes) {
  require(bytes.size() >= 132, Err::MissingMagic, "file shorter than preamble + magic");
  require(std::memcmp(bytes.data() + 128, "DICM", 4) == 0, Err::MissingMagic,
          "no DICM marker at offset 128");

  Reader r{bytes.data(), bytes.size(), 132};
  DicomDataset ds;

  // File meta group (0002,xxxx) is always Explicit VR LE.
  while (r.remaining() >= 8) {
    const uint16_t g = static_cast<uint16_t>(r.p[r.pos] | (r.p[r.pos + 1] << 8));
    if (g != 0x0002) break;
    ds.elements.push_back(parse_element_explicit(r));
  }

  if (const DicomElement* ts = ds.find(0x0002, 0x0010)) {
    const std::string uid = element_text(*ts);
    if (uid == kTsExplicit) {
      ds.transfer_syntax = TransferSyntax::ExplicitVRLittleEndian;
    } else if (uid == kTsImplicit) {
      ds.transfer_syntax = TransferSyntax::ImplicitVRLittleEndian;
    } else {
      fail(Err::UnsupportedTransferSyntax, "transfer syntax " + uid);
    }
  }  // absent tag: keep the Explicit VR LE default

  while (r.pos < r.n) {
    require(r.remaining() >= 8, Err::TruncatedElement, "dangling bytes after last element");
    ds.elements.push_back(ds.transfer_syntax == TransferSyntax::ExplicitVRLittleEndian
                              ? parse_element_explicit(r)
                              : parse_element_implicit(r));
  }

  std::stable_sort(ds.elements.begin(), ds.elements.end(),
                   [](const DicomElement& a, const DicomElement& b) {
                     return std::make_pair(a.group, a.element) < std::make_pair(b.group, b.element);
                   });
  return ds;
}

namespace {

uint16_t required_u16(const DicomDataset& ds, uint16_t g, uint16_t e, const char* name) {
  const DicomElement* el = ds.find(g, e);
  if (!el) fail(Err::MissingRequiredTag, std::string(name) + " absent");
  require(el->value.size() >= 2, Err::MissingRequiredTag, std::string(name) + " too short");
  return static_cast<uint16_t>(el->value[0] | (el->value[1] << 8));
}

}  // namespace

ImageBuffer extract_image(const DicomDataset& ds) {
  const uint16_t rows = required_u16(ds, kGrpImage, kTagRows, "Rows");
  const uint16_t cols = required_u16(ds, kGrpImage, kTagColumns, "Columns");
  const uint16_t bits = required_u16(ds, kGrpImage, kTagBitsAllocated, "BitsAllocated");
  require(rows >= 1 && cols >= 1, Err::MissingRequiredTag, "Rows/Columns must be >= 1");
  require(bits == 8 || bits == 16, Err::MissingRequiredTag, "BitsAllocated must be 8 or 16");

  const DicomElement* px = ds.find(0x7fe0, 0x0010);
  if (!px) fail(Err::MissingRequiredTag, "PixelData absent");

  const size_t expected = static_cast<size_t>(rows) * cols * (bits / 8);
  const bool padded = expected % 2 == 1 && px->value.size() == expected + 1;
  require(px->value.size() == expected || padded, Err::PixelDataSizeMismatch,
          "PixelData length " + std::to_string(px->value.size()) + ", expected " +
              std::to_string(expected));

  ImageBuffer img = make_image(cols, rows, bits);
  if (bits == 8) {
    for (size_t i = 0; i < img.pixel_count(); ++i) img.samples[i] = px->value[i];
  } else {
    for (size_t i = 0; i < img.pixel_count(); ++i) {
      img.samples[i] = static_cast<uint16_t>(px->value[2 * i] | (px->value[2 * i + 1] << 8));
    }
  }

  if (const DicomElement* photo = ds.find(kGrpImage, kTagPhotometric)) {
    if (element_text(*photo) == "MONOCHROME1") {
      const uint16_t mx = img.max_value();
      for (auto& v : img.samples) v = static_cast<uint16_t>(mx - v);
    }
  }
  return img;
}

std::optional<Window> extract_window(const DicomDataset& ds) {
  const DicomElement* c = ds.find(kGrpImage, kTagWindowCenter);
  const DicomElement* w = ds.find(kGrpImage, kTagWindowWidth);
  if (!c || !w) return std::nullopt;
  try {
    // DS is a decimal string; multi-valued uses '\' and we take the first.
    const std::string cs = element_text(*c);
    const std::string ws = element_text(*w);
    const double center = std::stod(cs.substr(0, cs.find('\\')));
    const double width = std::stod(ws.substr(0, ws.find('\\')));
    if (width <= 0) return std::nullopt;
    return Window{center, width};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<uint8_t> synth_dicom(const ImageBuffer& img, const std::string& patient_id) {
  check_image(img);
  require(patient_id.size() <= 64, Err::Internal, "patient id too long");
  require(img.width <= 65535 && img.height <= 65535, Err::Internal, "dims exceed DICOM US range");

  const std::string sop_class = "1.2.840.10008.5.1.4.1.1.7";  // secondary capture
  // Instance UID derives from content so fixtures are deterministic.
  uint64_t h = fnv1a(reinterpret_cast<const uint8_t*>(img.samples.data()),
                     img.samples.size() * sizeof(uint16_t));
  h = fnv1a(reinterpret_cast<const uint8_t*>(patient_id.data()), patient_id.size(), h);
  const std::string sop_instance = "1.2.826.0.1.3680043.8.498." + std::to_string(h % 1000000000000ULL);

  std::vector<uint8_t> pixel_bytes;
  pixel_bytes.reserve(img.pixel_count() * (img.bit_depth / 8));
  for (uint16_t v : img.samples) {
    pixel_bytes.push_back(static_cast<uint8_t>(v & 0xff));
    if (img.bit_depth == 16) pixel_bytes.push_back(static_cast<uint8_t>(v >> 8));
  }

  std::vector<uint8_t> meta;
  append_element(meta, 0x0002, 0x0001, "OB", {0x00, 0x01});
  append_text(meta, 0x0002, 0x0002, "UI", sop_class);
  append_text(meta, 0x0002, 0x0003, "UI", sop_instance);
  append_text(meta, 0x0002, 0x0010, "UI", kTsExplicit);
  append_text(meta, 0x0002, 0x0012, "UI", "1.2.826.0.1.3680043.8.498.1");

  std::vector<uint8_t> out(128, 0);
  for (char c : {'D', 'I', 'C', 'M'}) out.push_back(static_cast<uint8_t>(c));
  {
    std::vector<uint8_t> len;
    append_u32(len, static_cast<uint32_t>(meta.size()));
    append_element(out, 0x0002, 0x0000, "UL", std::move(len));
  }
  out.insert(out.end(), meta.begin(), meta.end());

  append_text(out, 0x0008, 0x0016, "UI", sop_class);
  append_text(out, 0x0008, 0x0018, "UI", sop_instance);
  append_text(out, 0x0010, 0x0020, "LO", patient_id);
  append_us(out, 0x0028, 0x0002, 1);
  append_text(out, 0x0028, 0x0004, "CS", "MONOCHROME2");
  append_us(out, 0x0028, kTagRows, static_cast<uint16_t>(img.height));
  append_us(out, 0x0028, kTagColumns, static_cast<uint16_t>(img.width));
  append_us(out, 0x0028, kTagBitsAllocated, static_cast<uint16_t>(img.bit_depth));
  append_us(out, 0x0028, 0x0101, static_cast<uint16_t>(img.bit_depth));
  append_us(out, 0x0028, 0x0102, static_cast<uint16_t>(img.bit_depth - 1));
  append_us(out, 0x0028, 0x0103, 0);
  append_element(out, 0x7fe0, 0x0010, img.bit_depth == 16 ? "OW" : "OB", std::move(pixel_bytes));
  return out;
}

}  // namespace semcrypt::dicom
