#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semcrypt/image.hpp"

namespace semcrypt::dicom {

enum class TransferSyntax {
  ExplicitVRLittleEndian,
  ImplicitVRLittleEndian,
};

struct DicomElement {
  uint16_t group = 0;
  uint16_t element = 0;
  std::array<char, 2> vr{'U', 'N'};
  std::vector<uint8_t> value;  // even length (DICOM padding rule)

  bool tag_is(uint16_t g, uint16_t e) const { return group == g && element == e; }
};

struct DicomDataset {
  std::vector<DicomElement> elements;  // ascending by (group, element)
  TransferSyntax transfer_syntax = TransferSyntax::ExplicitVRLittleEndian;

  const DicomElement* find(uint16_t g, uint16_t e) const;
};

// Common tags used by the pipeline.
inline constexpr uint16_t kGrpImage = 0x0028;
inline constexpr uint16_t kTagRows = 0x0010;
inline constexpr uint16_t kTagColumns = 0x0011;
inline constexpr uint16_t kTagBitsAllocated = 0x0100;
inline constexpr uint16_t kTagPhotometric = 0x0004;
inline constexpr uint16_t kTagWindowCenter = 0x1050;
inline constexpr uint16_t kTagWindowWidth = 0x1051;

// Parses a Part-10 subset: 128-byte preamble + "DICM", explicit-VR meta
// group, dataset in Explicit or Implicit VR Little Endian.  Sequences are
// kept structurally opaque.  Never reads past declared lengths.
DicomDataset parse_dicom(const std::vector<uint8_t>& bytes);

// Pulls the raster out of Rows/Columns/BitsAllocated/PixelData.
// MONOCHROME1 is inverted so that callers always see MONOCHROME2 convention.
ImageBuffer extract_image(const DicomDataset& ds);

// Window tags (0028,1050)/(0028,1051), if both present and parseable.
std::optional<Window> extract_window(const DicomDataset& ds);

// Emits an Explicit VR Little Endian Part-10 file whose round-trip through
// parse_dicom + extract_image reproduces img exactly.  Deterministic.
std::vector<uint8_t> synth_dicom(const ImageBuffer& img, const std::string& patient_id);

// Decoded string form of a text element (trailing padding stripped).
std::string element_text(const DicomElement& el);

}  // namespace semcrypt::dicom
