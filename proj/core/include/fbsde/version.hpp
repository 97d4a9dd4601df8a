#pragma once

#define FBSDE_VERSION "0.1.0"
