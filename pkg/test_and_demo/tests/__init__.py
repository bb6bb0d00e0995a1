# Test package for floatsim
