#pragma once

#define PFAGD_VERSION "0.1.0"
