var re = /ab+c/g, o = {"k": 1}; x = a / b / c; navigator.sendBeacon(u);