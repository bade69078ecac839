var abc = "é"; ünïcode = 1; $jq._x = 0x1F;