#pragma once

#define QNG_VERSION_STRING "0.1.0"
