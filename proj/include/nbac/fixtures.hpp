#pragma once

#include <string_view>

#include "nbac/nib.hpp"

// Built-in topologies mirrored by the files under fixtures/topologies.

namespace nbac::fixtures {

// Three switches in a line, one host per switch, single region.
inline constexpr std::string_view kLine3 = R"({
  "nodes": [
    {"id": "h1", "jurisdiction": "region-A", "placement": "host", "ltps": ["h1-s1"]},
    {"id": "h2", "jurisdiction": "region-A", "placement": "host", "ltps": ["h2-s2"]},
    {"id": "h3", "jurisdiction": "region-A", "placement": "host", "ltps": ["h3-s3"]},
    {"id": "s1", "jurisdiction": "region-A", "placement": "edge", "ltps": ["s1-h1", "s1-s2"]},
    {"id": "s2", "jurisdiction": "region-A", "placement": "core", "ltps": ["s2-s1", "s2-h2", "s2-s3"]},
    {"id": "s3", "jurisdiction": "region-A", "placement": "edge", "ltps": ["s3-s2", "s3-h3"]}
  ],
  "links": [
    [["h1", "h1-s1"], ["s1", "s1-h1"]],
    [["s1", "s1-s2"], ["s2", "s2-s1"]],
    [["h2", "h2-s2"], ["s2", "s2-h2"]],
    [["s2", "s2-s3"], ["s3", "s3-s2"]],
    [["h3", "h3-s3"], ["s3", "s3-h3"]]
  ]
})";

// Five switches across two regions (A: s1..s3 + host ha, B: s4..s5 + host hb).
inline constexpr std::string_view kMesh5 = R"({
  "nodes": [
    {"id": "ha", "jurisdiction": "region-A", "placement": "host", "ltps": ["ha-s1"]},
    {"id": "hb", "jurisdiction": "region-B", "placement": "host", "ltps": ["hb-s5"]},
    {"id": "s1", "jurisdiction": "region-A", "placement": "edge", "ltps": ["s1-ha", "s1-s2", "s1-s3"]},
    {"id": "s2", "jurisdiction": "region-A", "placement": "core", "ltps": ["s2-s1", "s2-s3", "s2-s4"]},
    {"id": "s3", "jurisdiction": "region-A", "placement": "core", "ltps": ["s3-s1", "s3-s2", "s3-s4"]},
    {"id": "s4", "jurisdiction": "region-B", "placement": "core", "ltps": ["s4-s2", "s4-s3", "s4-s5"]},
    {"id": "s5", "jurisdiction": "region-B", "placement": "edge", "ltps": ["s5-s4", "s5-hb"]}
  ],
  "links": [
    [["ha", "ha-s1"], ["s1", "s1-ha"]],
    [["s1", "s1-s2"], ["s2", "s2-s1"]],
    [["s1", "s1-s3"], ["s3", "s3-s1"]],
    [["s2", "s2-s3"], ["s3", "s3-s2"]],
    [["s2", "s2-s4"], ["s4", "s4-s2"]],
    [["s3", "s3-s4"], ["s4", "s4-s3"]],
    [["s4", "s4-s5"], ["s5", "s5-s4"]],
    [["s5", "s5-hb"], ["hb", "hb-s5"]]
  ]
})";

inline nib::NibSnapshot line3() { return nib::load_topology_text(kLine3); }
inline nib::NibSnapshot mesh5() { return nib::load_topology_text(kMesh5); }

}  // namespace nbac::fixtures
