#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "freqdisc/augment.hpp"
#include "freqdisc/image.hpp"
#include "freqdisc/spectral.hpp"

namespace freqdisc {

struct BankEntry {
  ImageTensor image;
  int pseudo_label = 0;
  double confidence = 0;
  std::uint64_t insert_seq = 0;  // assigned by MemoryBank::push
  std::string source_id;
};

/// Fixed-capacity FIFO of unknown-domain samples. A single queue across all
/// classes: eviction always removes the globally oldest entry.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity);

  /// Appends the entry (stamping its insert_seq) and evicts the oldest when full.
  void push(BankEntry entry);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const std::deque<BankEntry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
  std::deque<BankEntry> entries_;
};

struct DonorChoice {
  const BankEntry* entry = nullptr;
  bool class_matched = false;  // true when drawn from the confidence-gated class pool
};

/// Uniform draw among entries predicted as class_k with confidence > eta; if
/// none qualifies, a uniform draw from the whole bank. Returns nullopt for an
/// empty bank. With require_donor_confidence off the gate only checks the class.
std::optional<DonorChoice> select_style_donor(const MemoryBank& bank, int class_k, double eta,
                                              Rng& rng, bool require_donor_confidence = true);

struct PseudoLabel {
  int label = 0;
  double confidence = 0;
};

struct CdfpOptions {
  double eta = 0.9;
  FreqWindow window{};
  bool class_aware = true;  // off: donors are always drawn from the whole bank
  bool gate_both = true;    // donor confidence must also exceed eta
};

struct CdfpResult {
  ImageTensor image;
  bool perturbed = false;  // false only for the empty-bank identity fallback
  bool class_matched = false;
  std::uint64_t donor_seq = 0;
  int donor_label = -1;
};

/// Cross-domain perturbation: the receiver keeps its phase and takes the
/// low-frequency amplitude of an unknown-domain donor.
CdfpResult cdfp(const ImageTensor& known_image, PseudoLabel known_pseudo, const MemoryBank& bank,
                const CdfpOptions& options, Rng& rng);

struct IdfpResult {
  ImageTensor view_a;
  ImageTensor view_b;
  ImageTensor perturbed;
  bool a_into_b = false;  // perturbed = b's phase with a's low-frequency amplitude
};

/// Intra-domain perturbation: two augmented views exchange low-frequency
/// amplitude; one of the two swap directions is kept at random.
IdfpResult idfp(const ImageTensor& image, const AugmentationSpec& spec_a,
                const AugmentationSpec& spec_b, FreqWindow window, Rng& rng);

}  // namespace freqdisc
