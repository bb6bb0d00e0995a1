# Free-floating target contact simulation package
