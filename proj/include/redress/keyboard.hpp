#pragma once

#include <string_view>

namespace redress {

// Fixed QWERTY adjacency used for character-substitution candidates. Shipping
// the table keeps char attacks identical across platforms.
inline std::string_view keyboard_neighbors(char c) {
  switch (c) {
    case 'a': return "qwsz";
    case 'b': return "vghn";
    case 'c': return "xdfv";
    case 'd': return "erfcxs";
    case 'e': return "wsdr";
    case 'f': return "rtgvcd";
    case 'g': return "tyhbvf";
    case 'h': return "yujnbg";
    case 'i': return "ujko";
    case 'j': return "uikmnh";
    case 'k': return "iolmj";
    case 'l': return "opk";
    case 'm': return "njk";
    case 'n': return "bhjm";
    case 'o': return "iklp";
    case 'p': return "ol";
    case 'q': return "wa";
    case 'r': return "edft";
    case 's': return "wedxza";
    case 't': return "rfgy";
    case 'u': return "yhji";
    case 'v': return "cfgb";
    case 'w': return "qase";
    case 'x': return "zsdc";
    case 'y': return "tghu";
    case 'z': return "asx";
    default: return "";
  }
}

}  // namespace redress
