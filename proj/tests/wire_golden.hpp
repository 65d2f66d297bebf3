#pragma once

#include <cstdint>
#include <vector>

namespace golden {

// A 2x2 rgb8 frame on "/cam" at (5 s, 250 ms), frame_id "f", payload 0..11,
// spelled out byte by byte from the record layout.
inline const std::vector<std::uint8_t> kImage = {
    0x4D, 0x42, 0x41, 0x47,                          // magic
    0x01, 0x01, 0x00, 0x00,                          // version, kind image, reserved
    0x30, 0x00, 0x00, 0x00,                          // body length 48
    0x04, '/', 'c', 'a', 'm',                        // topic
    0x05, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // sec
    0x80, 0xB2, 0xE6, 0x0E,                          // nsec 250000000
    0x01, 'f',                                       // frame_id
    0x01,                                            // rgb8
    0x02, 0x00, 0x00, 0x00,                          // width
    0x02, 0x00, 0x00, 0x00,                          // height
    0x06, 0x00, 0x00, 0x00,                          // step
    0x0C, 0x00, 0x00, 0x00,                          // payload length
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11,
};

}  // namespace golden
